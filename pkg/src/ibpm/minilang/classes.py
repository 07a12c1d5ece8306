"""Single-inheritance class table with supertype chains."""

from __future__ import annotations

from .ast import INT, INT_ARRAY, OBJECT, Program


class ClassTableError(ValueError):
    pass


class ClassTable:
    """Class name -> (parent, own fields). ``Object`` is the implicit root."""

    def __init__(self, entries: dict[str, tuple[str, tuple[str, ...]]]):
        self._parent = {OBJECT: None}
        self._fields = {OBJECT: ()}
        for name, (parent, fields) in entries.items():
            if name == OBJECT or name in (INT, INT_ARRAY):
                raise ClassTableError(f"class name {name!r} is reserved")
            self._parent[name] = parent
            self._fields[name] = tuple(fields)
        for name, parent in self._parent.items():
            if parent is not None and parent not in self._parent:
                raise ClassTableError(f"class {name} extends unknown class {parent}")
        for name in self._parent:
            seen = set()
            c = name
            while c is not None:
                if c in seen:
                    raise ClassTableError(f"inheritance cycle through {name}")
                seen.add(c)
                c = self._parent[c]

    @classmethod
    def from_program(cls, program: Program) -> "ClassTable":
        return cls({c.name: (c.parent, tuple(c.fields)) for c in program.classes})

    def __contains__(self, name: str) -> bool:
        return name in self._parent

    @property
    def names(self) -> list[str]:
        return list(self._parent)

    def parent(self, name: str) -> str | None:
        return self._parent[name]

    def chain(self, name: str) -> list[str]:
        """``name`` followed by every supertype up to the root."""
        out = []
        c = name
        while c is not None:
            out.append(c)
            c = self._parent[c]
        return out

    def is_subclass(self, sub: str, sup: str) -> bool:
        return sup in self.chain(sub)

    def fields(self, name: str) -> list[str]:
        """Own and inherited fields, root-most first."""
        out: list[str] = []
        for c in reversed(self.chain(name)):
            out.extend(f for f in self._fields[c] if f not in out)
        return out

    def subclasses(self, name: str) -> list[str]:
        return [c for c in self._parent if self.is_subclass(c, name)]

    def type_tokens(self, t: str) -> list[str]:
        """Type tokens with the supertype closure for class types."""
        if t in (INT, INT_ARRAY):
            return [t]
        return self.chain(t)
