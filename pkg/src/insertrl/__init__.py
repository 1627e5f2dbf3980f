"""insertrl: peg insertion from demonstrations at desk scale.

A deterministic planar contact simulator, a demonstration-seeded
deterministic-policy-gradient learner, difficulty curricula, scripted
baselines, and a teleoperation channel for human demos and corrections.
"""

__version__ = "0.1.0"
