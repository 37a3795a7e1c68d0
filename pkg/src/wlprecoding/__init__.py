"""Widely linear multiuser precoding and user selection for PAM signalling."""

__version__ = '0.1.0'

from .channel import ChannelSet, RngStream, draw_rayleigh_channel
from .modulation import Constellation
from .precoding import Precoder, build_precoder
from .selection import susom, sus
from .simulate import (ScenarioConfig, run_sweep, run_ser_sweep, run_rate_sweep,
                       run_selection_census)

__all__ = ['ChannelSet', 'RngStream', 'draw_rayleigh_channel', 'Constellation',
           'Precoder', 'build_precoder', 'susom', 'sus', 'ScenarioConfig',
           'run_sweep', 'run_ser_sweep', 'run_rate_sweep', 'run_selection_census']
