"""Recurrent and feed-forward building blocks."""

from .base import InkModel, item_rng
from .batch import PaddedBatch
from .layers import DenseParams, FeedForwardParams, dense, feed_forward, init_dense, init_feed_forward, linear
from .lstm import GATE_ORDER, LstmParams, LstmState, birnn_forward, init_lstm, lstm_step, unroll
from .params import ParamStore, uniform_init

__all__ = [
    "InkModel",
    "item_rng",
    "PaddedBatch",
    "DenseParams",
    "FeedForwardParams",
    "dense",
    "feed_forward",
    "init_dense",
    "init_feed_forward",
    "linear",
    "GATE_ORDER",
    "LstmParams",
    "LstmState",
    "birnn_forward",
    "init_lstm",
    "lstm_step",
    "unroll",
    "ParamStore",
    "uniform_init",
]
