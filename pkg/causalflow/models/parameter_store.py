from collections import OrderedDict
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from causalflow.models.configuration_error import ConfigurationError
from causalflow.numerics.tensor import Parameter


class ParameterStore:
    """
    Ordered, named collection of Parameters. Insertion order is the
    serialization order, so building a model with the same seed yields the
    same store byte for byte.
    """

    def __init__(self, dtype: np.dtype = np.float32):
        self.dtype = np.dtype(dtype)
        self._params: "OrderedDict[str, Parameter]" = OrderedDict()

    def add(self, name: str, group: str, values: np.ndarray) -> Parameter:
        if name in self._params:
            raise ConfigurationError(f"Parameter {name} already exists")
        param = Parameter(np.asarray(values, dtype=self.dtype), name=name, group=group)
        self._params[name] = param
        return param

    def normal(self, name: str, group: str, shape: Tuple[int, ...], rng: np.random.Generator, scale: float) -> Parameter:
        return self.add(name, group, rng.normal(0.0, scale, size=shape))

    def ones(self, name: str, group: str, shape: Tuple[int, ...]) -> Parameter:
        return self.add(name, group, np.ones(shape))

    def __getitem__(self, name: str) -> Parameter:
        try:
            return self._params[name]
        except KeyError:
            raise ConfigurationError(f"Unknown parameter {name}")

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def parameters(self, groups: Optional[Iterable[str]] = None) -> List[Parameter]:
        if groups is None:
            return list(self._params.values())
        wanted = set(groups)
        return [p for p in self._params.values() if p.group in wanted]

    def remove_prefix(self, prefix: str) -> None:
        for name in [n for n in self._params if n.startswith(prefix)]:
            del self._params[name]

    def set_trainable(self, groups: Sequence[str]) -> None:
        """Exactly the listed groups train; everything else freezes"""
        wanted = set(groups)
        for param in self._params.values():
            param.trainable = param.group in wanted

    def zero_gradients(self) -> None:
        for param in self._params.values():
            param.zero_gradient()

    def count(self) -> int:
        return int(sum(p.data.size for p in self._params.values()))
