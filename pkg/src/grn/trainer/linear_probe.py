"""Linear probe for checking that dead input coordinates stay dead.

A single linear layer is trained with Adam on an arbitrary loss of its
outputs. Weight columns attached to input coordinates that are zero for
every sample receive exactly zero gradient from the matmul, and Adam's
moment estimates stay at zero for them, so those columns must remain
bitwise unchanged over any number of steps.
"""

import torch
from torch import nn


def train_linear_probe(
    loss_of_outputs,
    inputs,
    zero_coords,
    out_features,
    steps=100,
    learning_rate=2e-4,
    adam_betas=(0.5, 0.999),
    seed=0,
):
    """Train a linear layer and report initial and final weights.

    inputs: float tensor of shape (N, in_features). The coordinates listed
    in zero_coords are forced to zero before training.
    loss_of_outputs: callable mapping the layer output (N, out_features)
    to a scalar loss.

    Returns (initial_weight, final_weight, layer) where the weights are
    detached clones of the (out_features, in_features) matrix.
    """
    torch.manual_seed(seed)
    inputs = inputs.clone()
    if len(zero_coords) > 0:
        inputs[:, list(zero_coords)] = 0.0

    layer = nn.Linear(inputs.shape[1], out_features)
    optimizer = torch.optim.Adam(
        layer.parameters(), lr=learning_rate, betas=adam_betas
    )

    initial = layer.weight.detach().clone()
    for _ in range(steps):
        optimizer.zero_grad()
        loss = loss_of_outputs(layer(inputs))
        loss.backward()
        optimizer.step()
    final = layer.weight.detach().clone()
    return initial, final, layer
