from typing import Any, Optional
from pydantic import Field
from pydantic.fields import FieldInfo


class Flag():
    """Define a command-line flag implicitly through a command's signature

    :param default: default value, `...` makes the flag required
    :param alias: flag name on the command line, `--t-max` for `t_max` if omitted
    :param description: help text
    :param gt: greater than `>`
    :param ge: greater equals `>=`
    :param le: less equals `<=`
    :param metavar: placeholder shown in the help text
    """
    def __init__(
        self,
        default: Any = ...,
        *,
        alias: Optional[str] = None,
        description: Optional[str] = None,
        gt: Optional[float] = None,
        ge: Optional[float] = None,
        le: Optional[float] = None,
        metavar: Optional[str] = None,
    ) -> None:
        self.default = default
        self.alias = alias
        self.description = description
        self.gt = gt
        self.ge = ge
        self.le = le
        self.metavar = metavar
        self.dtype = type(default)

    @property
    def required(self) -> bool:
        return self.default is ...

    def option_name(self, name: str) -> str:
        return self.alias or "--" + name.replace("_", "-")

    def as_field(self) -> FieldInfo:
        return Field(self.default, description=self.description, gt=self.gt, ge=self.ge, le=self.le)

    def __repr__(self) -> str:
        return f"<FLAG ({self.dtype.__name__}) : {self.default}>"
