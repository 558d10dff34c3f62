"""Stimulus generation and scoring for the five neuro-task mini-games."""

from gemmind.minigames.types import StimulusItem, StimulusSchedule, TaskScore
from gemmind.minigames.rsvp import RsvpConfig, build_rsvp_sequence, score_rsvp
from gemmind.minigames.ssvep import SsvepTrial, actual_frequency, build_ssvep_trial, score_ssvep
from gemmind.minigames.motor import MiTrial, ModeAlternator, build_mi_trial, evaluate_mi_trial
from gemmind.minigames.nback import NBackTrial, build_nback_sequence, nback_schedule, score_nback
from gemmind.minigames.scheduler import MinigameScheduler, ShuffledBag, TaskSelection

__all__ = [
    "MinigameScheduler",
    "MiTrial",
    "ModeAlternator",
    "NBackTrial",
    "RsvpConfig",
    "ShuffledBag",
    "SsvepTrial",
    "StimulusItem",
    "StimulusSchedule",
    "TaskScore",
    "TaskSelection",
    "actual_frequency",
    "build_mi_trial",
    "build_nback_sequence",
    "build_rsvp_sequence",
    "build_ssvep_trial",
    "evaluate_mi_trial",
    "nback_schedule",
    "score_nback",
    "score_rsvp",
    "score_ssvep",
]
