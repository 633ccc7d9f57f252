"""Parameter cells of the reference figure set.

fig2-fig4 follow the MRC S-Rake alone (needed Es/N0 versus dt), fig5-fig7
compare the three receivers (worst-case and average-case loss).

All figures run the symbol clock at the pulse period (N = 1), so the offset
grid 0, 0.1 T_s, ..., 0.9 T_s walks across the main lobe of the composite
pulse. With N = 12 every nonzero offset already sits past the first zero
crossing and the loss saturates for every receiver alike.
"""
from src.services.rake import DEFAULT_RECEIVERS

_MRC_SRAKE = (DEFAULT_RECEIVERS[0],)
_ALL = tuple(DEFAULT_RECEIVERS)
_RATE_SWEEP = (0.1, 0.2, 0.3, 0.4, 0.5)

# SystemConfig overrides shared by every figure
FIGURE_SYSTEM = {"spread_length": 1}

PRESETS: dict[str, dict] = {
    # roll-off, J = 8, R = 0.3
    "fig2": dict(receivers=_MRC_SRAKE, rolloffs=(0.3, 1.0), finger_counts=(8,), rates=(0.3,)),
    # diversity order, alpha = 1.0, R = 0.3
    "fig3": dict(receivers=_MRC_SRAKE, rolloffs=(1.0,), finger_counts=(2, 4, 8), rates=(0.3,)),
    # target rate, alpha = 0.3, J = 8
    "fig4": dict(receivers=_MRC_SRAKE, rolloffs=(0.3,), finger_counts=(8,), rates=_RATE_SWEEP),
    "fig5": dict(receivers=_ALL, rolloffs=(0.1, 0.3, 0.5, 0.7, 1.0), finger_counts=(8,), rates=(0.3,)),
    "fig6": dict(receivers=_ALL, rolloffs=(1.0,), finger_counts=(2, 4, 8), rates=(0.3,)),
    "fig7": dict(receivers=_ALL, rolloffs=(0.3,), finger_counts=(8,), rates=_RATE_SWEEP),
}


def preset(name: str) -> dict:
    """SweepConfig field values for a named figure preset; ``system`` is a dict of overrides."""
    if name not in PRESETS:
        raise ValueError(f"Unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    return {**PRESETS[name], "system": dict(FIGURE_SYSTEM)}
