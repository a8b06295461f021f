"""Selective gradient propagation helpers.

``detached_call`` runs a module with all its parameters detached from the
autograd graph: gradients flow through the computation into the *inputs*
but never into the module's own weights, making freeze contracts
structural rather than relying on optimizer bookkeeping.
"""

from __future__ import annotations

import torch
from torch.func import functional_call


def detached_params(module: torch.nn.Module) -> dict[str, torch.Tensor]:
    params = {name: p.detach() for name, p in module.named_parameters()}
    params.update({name: b.detach() for name, b in module.named_buffers()})
    return params


def detached_call(module: torch.nn.Module, *args, **kwargs):
    return functional_call(module, detached_params(module), args, kwargs)
