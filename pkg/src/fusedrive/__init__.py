"""Desk-scale simulator of a line-following vehicle steered over a lossy network.

The package models a differential-drive vehicle on a 2 m x 2 m board, an
on-vehicle line camera plus roadside overhead cameras that each run their own
PID steering loop, a UDP-style text wire format, and a vehicle node that fuses
whichever command streams survive the network.  Everything is deterministic
under a scenario seed so experiments can be replayed bit for bit.
"""

__version__ = "0.1.0"
