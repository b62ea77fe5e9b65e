def lr_at(step: int, base_lr: float, warmup_steps: int) -> float:
    """
    Linear warmup from 0 to base_lr over warmup_steps, constant afterwards.
    """
    if step < 0:
        raise ValueError(f"{step=} must be non-negative")
    if warmup_steps == 0:
        return base_lr
    return base_lr * min(1.0, step / warmup_steps)
