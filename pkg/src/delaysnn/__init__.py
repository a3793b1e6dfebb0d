"""Recurrent spiking neural networks with learnable axonal delays.

Supports dense and 1D-convolutional recurrent connectivity, triangular-spread
delay learning with sigma annealing, manual BPTT with an arctangent surrogate
gradient, and a compiled fast path for eval-mode inference.
"""

from .config import RunConfig, preset
from .data import (DatasetSplit, SampleRecord, bin_sample, batch_iter,
                   make_interval_task, read_event_file, write_event_file)
from .delays import (DelayVector, SchedulingBuffer, SpreadConfig, anneal,
                     delay_stats, init_delays, round_for_inference, spread,
                     spread_grad_d)
from .model import (NetworkModel, build_model, count_params, forward_eval,
                    load_model, save_model)
from .neuron import LifParams, LifState, lif_step, readout_step
from .recurrent import (RecurrentKernel, apply_recurrent,
                        count_recurrent_params, init_kernel)
from .training import (backward, evaluate, forward_train, grad_check, loss_ce,
                       train)

__version__ = "0.1.0"
