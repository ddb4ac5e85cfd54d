"""Built-in sweep definitions for the coincidence-probability figures.

Each entry pairs a circuit description with the axes swept over it, in the
same syntax the ``sweep`` subcommand accepts on the command line.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FigureSweep:
    description: str
    config: str
    vary: tuple[str, ...]


FIGURES = {
    "fig1b": FigureSweep(
        "single crystal seeded with |1,1>, P(1,1) against r",
        "kind = single_seeded\nr = 0\n",
        ("r=0:2:201",),
    ),
    "fig2b": FigureSweep(
        "two crystals with r1 = r2 = r, P(1,1) against the phase for three gains",
        "kind = two_crystal\nr = 1\nr1 = r\nr2 = r\nphi = 0\n",
        ("r=0.2,1.0,2.0", "phi=0:2pi:361"),
    ),
    "fig3b": FigureSweep(
        "three crystals with r1 = r2 = r3 = 1, P(1,1) over both phases",
        "kind = three_crystal\nr1 = 1.0\nr2 = 1.0\nr3 = 1.0\nphi1 = 0\nphi2 = 0\n",
        ("phi1=0:2pi:31", "phi2=0:2pi:31"),
    ),
    "fig3c": FigureSweep(
        "three crystals with (r1, r2, r3) = (1.0, 0.5, 0.6), P(1,1) over both phases",
        "kind = three_crystal\nr1 = 1.0\nr2 = 0.5\nr3 = 0.6\nphi1 = 0\nphi2 = 0\n",
        ("phi1=0:2pi:31", "phi2=0:2pi:31"),
    ),
    "fig4b": FigureSweep(
        "four crystals at phi = pi with r2 = r1 and r4 = r3, P(1,1,1,1) over (r1, r3)",
        "kind = four_crystal\nr1 = 0.5\nr2 = r1\nr3 = 0.5\nr4 = r3\nphi = pi\n",
        ("r1=0:1.5:31", "r3=0:1:21"),
    ),
    "fig4c": FigureSweep(
        "four crystals at phi = 0 with r2 = r1 and r4 = 2 r3, P(1,1,1,1) over (r1, r3)",
        "kind = four_crystal\nr1 = 1.5\nr2 = r1\nr3 = 1.0\nr4 = 2*r3\nphi = 0\n",
        ("r1=1:2.2:41", "r3=0.9:1.5:13"),
    ),
}
