"""Hand-written rule base transcribing the object catalog.

This is what a fully informed player would know: destroyers kill along
axes out to 4 (so the far bucket, which starts at 4, is treated as risky),
can be shot from diagonals at close range, stickers release after
push-pulling, power supplies charge on sustained touch, conveyor tips
fling you toward the target. Counts are synthetic; only the ratios matter
to the solver.
"""

from __future__ import annotations

from .rules import (
    ALIGNMENTS,
    BUCKET_ADJACENT,
    BUCKET_FAR,
    BUCKET_NEAR,
    BUCKET_NONE,
    RuleBase,
    RuleContext,
)
from .world import (
    AGENT_DESTROYED,
    CONVEYED,
    OBJECT_DESTROYED,
    POWER_GAINED,
    RELEASED,
    SHAPE_IDS,
    ObjectKind,
)

_SUPPORT = 100


def _put(base: RuleBase, ctx: RuleContext, action: str, outcome: str, confidence: float) -> None:
    base.support[(ctx, action)] = _SUPPORT
    base.hits[(ctx, action, outcome)] = round(confidence * _SUPPORT)


def oracle_rulebase(include_conveyor: bool = False) -> RuleBase:
    base = RuleBase()
    destroyer = SHAPE_IDS[ObjectKind.DESTROYER]
    sticker = SHAPE_IDS[ObjectKind.STICKER]
    power = SHAPE_IDS[ObjectKind.POWER_SUPPLY]
    conveyor = SHAPE_IDS[ObjectKind.CONVEYOR]

    # Axis lethality. Kill range 4 straddles the near/far bucket edge, so
    # far-axis is marked half-lethal: enough to keep the solver out.
    for attached in (False, True):
        for align in ("axis_h", "axis_v"):
            for bucket, conf in (
                (BUCKET_ADJACENT, 1.0),
                (BUCKET_NEAR, 1.0),
                (BUCKET_FAR, 0.5),
            ):
                ctx = RuleContext(destroyer, bucket, align, attached)
                _put(base, ctx, "wait", AGENT_DESTROYED, conf)

    # Shooting from the corners.
    for bucket in (BUCKET_ADJACENT, BUCKET_NEAR):
        ctx = RuleContext(destroyer, bucket, "diagonal", False)
        _put(base, ctx, "fire", OBJECT_DESTROYED, 1.0)

    # Push-pull frees you wherever you are stuck, whatever is nearest.
    for shape in (destroyer, sticker, power, conveyor):
        for bucket in (BUCKET_ADJACENT, BUCKET_NEAR, BUCKET_FAR):
            for align in ALIGNMENTS:
                ctx = RuleContext(shape, bucket, align, True)
                _put(base, ctx, "pushpull", RELEASED, 0.5)
    _put(base, RuleContext(None, BUCKET_NONE, "none", True), "pushpull", RELEASED, 0.5)

    # Sustained touch charges the agent.
    for align in ("axis_h", "axis_v", "diagonal"):
        ctx = RuleContext(power, BUCKET_ADJACENT, align, False)
        _put(base, ctx, "touch", POWER_GAINED, 0.5)

    # Conveyor flings are left out by default: the fling ends wherever the
    # straight line lands, which in a dense field is lethal often enough to
    # cost more missions than the free travel wins.
    if include_conveyor:
        ctx = RuleContext(conveyor, BUCKET_ADJACENT, "axis_h", False)
        _put(base, ctx, "touch", CONVEYED, 0.9)

    return base
