import re
from dataclasses import dataclass

from compbcp.errors import ConfigurationError

_BCP = re.compile(r"^BCP\((?P<sbar>p-1|p/2|p/4|s\+1|\d+)\)(?:-(?P<proc>BH|BY|Holm|PlainHolm))?(?P<dense>@dense)?$")
_BENCHMARK = re.compile(r"^(?P<family>LOO|Univariate)(?:-(?P<proc>BH|Holm))?$")

METHOD_SYNTAX = "BCP(p-1|p/2|p/4|s+1|<int>)[-BH|-BY|-Holm|-PlainHolm][@dense], LOO[-BH|-Holm], Univariate[-BH|-Holm]"


@dataclass(frozen=True)
class MethodSpec:
    """
    A parsed method name.

    ``procedure`` is None for a single test of one column, otherwise the
    selection procedure. ``dense`` restricts BCP to the conditioning set D.
    """

    name: str
    family: str
    s_bar_token: str | None = None
    procedure: str | None = None
    dense: bool = False

    @property
    def is_selection(self) -> bool:
        return self.procedure is not None

    def s_bar(self, p: int, s: int, d: int) -> int:
        """
        Resolve the s_bar token against the full dimension p, the number of
        non-nulls s and the number d of tested columns; capped at d - 1.
        """
        token = self.s_bar_token
        if token == "p-1":
            value = p - 1
        elif token == "p/2":
            value = p // 2
        elif token == "p/4":
            value = p // 4
        elif token == "s+1":
            value = s + 1
        else:
            value = int(token)
        return max(1, min(value, d - 1))


def parse_method(name: str) -> MethodSpec:
    match = _BCP.match(name)
    if match:
        return MethodSpec(name, "BCP", match["sbar"], match["proc"], bool(match["dense"]))
    match = _BENCHMARK.match(name)
    if match:
        return MethodSpec(name, match["family"], None, match["proc"])
    raise ConfigurationError(f"Unknown method {name!r}; expected {METHOD_SYNTAX}")
