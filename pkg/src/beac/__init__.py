"""Belief exploration-action cloning laboratory.

Subpackages: a float64 autodiff core, a planar invisible-object pushing
simulator, a scripted oracle demonstrator, the belief/mode/action model
stack with future- and past-observation regularization, an evaluation
harness, and a CLI with a teleoperation serve endpoint.
"""

__version__ = "0.1.0"
