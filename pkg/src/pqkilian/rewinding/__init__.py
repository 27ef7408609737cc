from .game import (FixedAnswerStrategy, Game, GameModel, Strategy, SubsetStrategy,
                   UniformAnswerStrategy, RankOneStrategy, exact_value)
from .play import (CollectingReferee, PlayParams, PlayRecord, Referee, fork, naive_bound,
                   naive_play, repeated_play)
from .repair import RepairOutcome, repair, repair_experiment, repair_projective, win_measurement
from .sigma import SigmaStatement, ToyProver, special_sound_extract
from .valest import ValEst, ValEstOutcome, ValEstParams, val_est

__all__ = [
    "CollectingReferee", "FixedAnswerStrategy", "Game", "GameModel", "PlayParams", "PlayRecord",
    "Referee", "RepairOutcome", "SigmaStatement", "Strategy", "SubsetStrategy", "ToyProver",
    "UniformAnswerStrategy", "ValEst", "ValEstOutcome", "ValEstParams", "RankOneStrategy",
    "exact_value", "fork", "naive_bound", "naive_play", "repair", "repair_experiment",
    "repair_projective", "repeated_play", "special_sound_extract", "val_est", "win_measurement",
]
