import argparse
import inspect
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, get_type_hints

import pydantic
from pydantic import create_model

from . import status
from .exceptions import PerfectSamplingError
from .fields import Flag
from .params import FlagSignature
from .responses import write_result
from .schemas import BaseSchema, from_pydantic_error


logger = logging.getLogger(__name__)


class CommandDefinition():
    def __init__(
        self,
        name: str,
        func: Callable,
        paired_flags: Dict[str, FlagSignature],
        pydantic_model: Any,
        summary: Optional[str] = None,
        description: Optional[str] = None,
    ) -> None:
        self.name = name
        self.func = func
        self.paired_flags = paired_flags
        self.pydantic_model = pydantic_model
        self.summary = summary
        self.description = description

    def __repr__(self) -> str:
        return f"CommandDefinition(name={self.name}, flags={list(self.paired_flags)})"

    def validate(self, values: Dict[str, Any]) -> Dict[str, Any]:
        """Flag values after pydantic coercion and constraint checks"""
        try:
            model = self.pydantic_model(**values)
        except pydantic.ValidationError as e:
            names = {k: fs.option for k, fs in self.paired_flags.items()}
            raise from_pydantic_error(e, names) from None
        return {k: getattr(model, k) for k in self.paired_flags}


class CommandRouter():
    """Collects subcommands registered with `command` and dispatches argv to them.

    Flags are read from each function's signature: a `Flag` default defines the
    flag, a plain default becomes an optional flag and a missing default a
    required one. Annotations drive the pydantic validation.

    :param prog: program name shown in the help text
    :param description: program description shown in the help text
    :param setup: called with the parsed global options before dispatch
    """
    def __init__(
        self,
        prog: str = "perfect-mcmc",
        description: Optional[str] = None,
        setup: Optional[Callable[[argparse.Namespace], None]] = None,
    ) -> None:
        self.prog = prog
        self.description = description
        self.setup = setup
        self.defined_commands: Dict[str, CommandDefinition] = {}

    def command(
        self,
        name: Optional[str] = None,
        summary: Optional[str] = None,
        description: Optional[str] = None,
    ) -> Callable:
        def decorator(func: Callable) -> Callable:
            command_name = name or func.__name__.replace("_", "-")
            if command_name in self.defined_commands:
                raise ValueError(f"command {command_name!r} is already registered")
            paired_flags = self._get_func_signature(func)
            pydantic_model = self.generate_command_pydantic(func.__name__ + "Flags", paired_flags)
            doc = inspect.getdoc(func) or ""
            self.defined_commands[command_name] = CommandDefinition(
                name=command_name,
                func=func,
                paired_flags=paired_flags,
                pydantic_model=pydantic_model,
                summary=summary or (doc.splitlines()[0] if doc else command_name),
                description=description or doc or None,
            )
            return func
        return decorator

    def generate_command_pydantic(self, name: str, paired_flags: Dict[str, FlagSignature]):
        params = {
            key: (fs._type, fs.flag_object.as_field())
            for key, fs in paired_flags.items()
        }
        return create_model(name, __base__=BaseSchema, **params)

    def _get_func_signature(self, func: Callable) -> Dict[str, FlagSignature]:
        annots = get_type_hints(func)
        pair = {}
        for k, p in inspect.signature(func).parameters.items():
            if p.default is inspect.Parameter.empty:
                flag = Flag(...)
            elif isinstance(p.default, Flag):
                flag = p.default
            else:
                flag = Flag(p.default)
            pair[k] = FlagSignature(k, annots.get(k, str), flag)
        return pair

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=self.prog, description=self.description)
        parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True
        for name, cmd in self.defined_commands.items():
            sub = subparsers.add_parser(name, help=cmd.summary, description=cmd.description)
            for key, fs in cmd.paired_flags.items():
                choices = fs.choices
                metavar = fs.flag_object.metavar or ("{" + "|".join(str(c) for c in choices) + "}" if choices else None)
                sub.add_argument(fs.option, dest=key, default=argparse.SUPPRESS, metavar=metavar, help=fs.help)
        return parser

    def dispatch(self, argv: Sequence[str], stdout: TextIO) -> int:
        parser = self.build_parser()
        args = parser.parse_args(list(argv))
        if self.setup is not None:
            self.setup(args)
        cmd = self.defined_commands[args.command]
        values = {k: v for k, v in vars(args).items() if k in cmd.paired_flags}
        kwargs = cmd.validate(values)
        logger.info("running %s", cmd.name)
        result = cmd.func(**kwargs)
        if result is not None:
            write_result(result, kwargs.get("out"), stdout)
        return status.EXIT_OK

    def run(self, argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
        """Dispatch and turn every toolkit error into its exit code"""
        argv = sys.argv[1:] if argv is None else argv
        stdout = sys.stdout if stdout is None else stdout
        stderr = sys.stderr if stderr is None else stderr
        try:
            return self.dispatch(argv, stdout)
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else status.EXIT_VALIDATION
        except PerfectSamplingError as e:
            stderr.write(f"{self.prog}: {status.EXIT_NAMES[e.exit_code]}: {e}\n")
            return e.exit_code
        except Exception:
            logger.exception("unexpected failure")
            return status.EXIT_FAILURE

    @property
    def command_names(self) -> List[str]:
        return list(self.defined_commands)
