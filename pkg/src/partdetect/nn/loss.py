"""Two-way softmax with categorical cross-entropy.

The output head is binary: exactly two logits, class 1 meaning "part
present". Softmax is stabilized by max-subtraction so huge logits cannot
overflow. The combined gradient of loss w.r.t. logits is probs - onehot.
"""

import numpy as np


def softmax(logits):
    """Row-wise stabilized softmax. Accepts (2,) or (N, 2) arrays."""
    z = np.asarray(logits)
    squeeze = z.ndim == 1
    if squeeze:
        z = z[None, :]
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    return p[0] if squeeze else p


def softmax_cross_entropy(logits, target):
    """Loss for a single 2-logit output against a class index.

    Returns (probs, loss) where probs sums to 1 and
    loss = -ln(probs[target]).
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (2,):
        raise ValueError(f"expected exactly 2 logits, got shape {logits.shape}")
    if target not in (0, 1):
        raise ValueError(f"target must be 0 or 1, got {target!r}")
    z = logits - logits.max()
    logsumexp = np.log(np.exp(z).sum())
    probs = np.exp(z - logsumexp)
    loss = float(logsumexp - z[target])
    return probs, loss


def softmax_cross_entropy_batch(logits, targets):
    """Mean cross-entropy over a batch of 2-logit rows.

    Returns (probs, mean_loss, dlogits) with dlogits already divided by the
    batch size, ready to feed the backward pass.
    """
    logits = np.asarray(logits)
    if logits.ndim != 2 or logits.shape[1] != 2:
        raise ValueError(f"expected (N, 2) logits, got shape {logits.shape}")
    targets = np.asarray(targets)
    if targets.shape != (logits.shape[0],):
        raise ValueError("targets must be one class index per row")
    if not np.isin(targets, (0, 1)).all():
        raise ValueError("targets must be 0 or 1")
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logprobs = z - logsumexp
    probs = np.exp(logprobs)
    loss = float(-logprobs[np.arange(n), targets].mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), targets] -= 1.0
    dlogits /= n
    return probs, loss, dlogits.astype(logits.dtype)
