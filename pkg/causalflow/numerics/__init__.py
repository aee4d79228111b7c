from causalflow.numerics.gradcheck import grad_check, grad_check_groups, relative_error  # noqa: F401
from causalflow.numerics.ops import (  # noqa: F401
    add,
    concat,
    cross_entropy,
    embedding,
    linear,
    masked_softmax,
    matmul,
    mul,
    rms_norm,
    rowwise_dot,
    scale,
    scatter,
    silu,
    slice_cols,
    slice_rows,
    take_rows,
    total,
    transpose,
)
from causalflow.numerics.tensor import (  # noqa: F401
    Parameter,
    Tensor,
    no_grad,
    resolve_dtype,
    zero_gradients,
)
