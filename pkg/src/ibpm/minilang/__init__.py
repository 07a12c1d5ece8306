"""MiniLang: a small imperative language standing in for Java sources."""

from .ast import Program
from .cfg import build_cfg
from .classes import ClassTable
from .generate import generate_program
from .inject import Injection, NotInjectable, inject_bug
from .inline import inline
from .interp import BAD_CAST, INDEX_OOB, NULL_DEREF, Fault, Ok, Timeout, interpret
from .parser import ParseError, parse
from .printer import render

__all__ = ["BAD_CAST", "ClassTable", "Fault", "INDEX_OOB", "Injection", "NULL_DEREF", "NotInjectable", "Ok",
           "ParseError", "Program", "Timeout", "build_cfg", "generate_program", "inject_bug", "inline",
           "interpret", "parse", "render"]
