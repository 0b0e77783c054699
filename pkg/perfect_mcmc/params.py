import enum
from typing import Any, Optional, Tuple

from .fields import Flag


class FlagSignature():
    def __init__(
        self,
        _name: str,
        _type: Any,
        _flag_object: Flag
    ) -> None:
        self._name = _name
        self._type = _type
        self._default = _flag_object.default
        self.flag_object = _flag_object
        self.flag_object.dtype = _type

    def __repr__(self) -> str:
        return f"FlagSignature(name={self._name}, type={self._type}, default={self._default}, flag_object={self.flag_object})"

    @property
    def option(self) -> str:
        return self.flag_object.option_name(self._name)

    @property
    def choices(self) -> Optional[Tuple[Any, ...]]:
        if isinstance(self._type, type) and issubclass(self._type, enum.Enum):
            return tuple(m.value for m in self._type)
        return None

    @property
    def help(self) -> str:
        text = self.flag_object.description or ""
        if not self.flag_object.required:
            default = self._default.value if isinstance(self._default, enum.Enum) else self._default
            text = f"{text} (default: {default})".strip()
        return text
