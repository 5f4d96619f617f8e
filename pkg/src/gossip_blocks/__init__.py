"""Two-community gossip dynamics with stubborn agents."""
from .analysis import analysis_report, expected_matrices, identifiable, stationary_expectation
from .detector import accuracy, init_detector, observe, track
from .harness import load_karate, monte_carlo_stationarity, run_karate, run_five_node
from .model import (BlockModel, GossipNetwork, InvalidModelError, five_node_model, read_edge_list,
                    to_general, validate_block_model, validate_network)
from .simulator import run, run_time_average, sample_path

__version__ = "0.1.0"
