"""
Loss Functions with Analytic Gradients
torch.autograd.Function implementations; inputs are (n, C) per-pixel tables
"""

import torch

CE_CLAMP = 1e-12


class StyleVectorLossFn(torch.autograd.Function):
    """||w_plus - w_e||^2 summed over every entry"""

    @staticmethod
    def forward(ctx, w_plus: torch.Tensor, w_e: torch.Tensor) -> torch.Tensor:
        diff = w_plus - w_e
        ctx.save_for_backward(diff)
        return (diff * diff).sum()

    @staticmethod
    def backward(ctx, grad_output):
        (diff,) = ctx.saved_tensors
        grad = 2.0 * diff * grad_output
        return grad, -grad


class CrossEntropyFn(torch.autograd.Function):
    """-(1/n) sum_i sum_c y_ic log(max(yhat_ic, 1e-12))"""

    @staticmethod
    def forward(ctx, y: torch.Tensor, yhat: torch.Tensor) -> torch.Tensor:
        clamped = yhat.clamp_min(CE_CLAMP)
        ctx.save_for_backward(y, yhat)
        return -(y * torch.log(clamped)).sum() / y.shape[0]

    @staticmethod
    def backward(ctx, grad_output):
        y, yhat = ctx.saved_tensors
        n = y.shape[0]
        live = yhat >= CE_CLAMP
        grad = torch.where(live, -y / (n * yhat.clamp_min(CE_CLAMP)), torch.zeros_like(yhat))
        return None, grad * grad_output


class DiceFn(torch.autograd.Function):
    """1 - (1/C) sum_c 2 I_c / (S_c + G_c + eps) over all classes"""

    @staticmethod
    def forward(ctx, y: torch.Tensor, yhat: torch.Tensor, epsilon: float) -> torch.Tensor:
        intersection = (yhat * y).sum(dim=0)
        denom = yhat.sum(dim=0) + y.sum(dim=0) + epsilon
        ctx.save_for_backward(y, intersection, denom)
        return 1.0 - (2.0 * intersection / denom).mean()

    @staticmethod
    def backward(ctx, grad_output):
        y, intersection, denom = ctx.saved_tensors
        num_classes = y.shape[1]
        grad = -(2.0 * y * denom - 2.0 * intersection) / (num_classes * denom * denom)
        return None, grad * grad_output, None


__all__ = ["CE_CLAMP", "StyleVectorLossFn", "CrossEntropyFn", "DiceFn"]
