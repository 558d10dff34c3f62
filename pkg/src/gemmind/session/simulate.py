"""Headless end-to-end session: game loop, mini-games, simulated player, EEG, archive.

Everything runs on a virtual nanosecond clock, so an hour-long session
simulates in seconds and two runs with the same master seed produce
byte-identical archives.
"""

from __future__ import annotations

import math
from pathlib import Path

from gemmind.errors import ArchiveError
from gemmind.game.config import GameConfig
from gemmind.game.engine import GameMode, MatchGame
from gemmind.minigames.motor import MiTrial
from gemmind.minigames.nback import build_nback_sequence, nback_schedule, score_nback
from gemmind.minigames.rsvp import RsvpConfig, build_rsvp_sequence, score_rsvp
from gemmind.minigames.scheduler import MinigameScheduler, TaskSelection
from gemmind.minigames.ssvep import build_ssvep_trial, score_ssvep
from gemmind.minigames.types import POWERUP_IDS
from gemmind.rng import substream, substream_seed
from gemmind.session.calibration import train_calibrated_model
from gemmind.session.config import SessionConfig
from gemmind.synth.generator import SynthConfig, synthesize_recording
from gemmind.timeline.archive import write_session_archive
from gemmind.timeline.events import MarkerEvent, Recorder, StreamHeader
from gemmind.dsp.motor_model import mi_classify

MOVE_RESOLVE_S = 0.2        # gem animation time per move
MINIGAME_LEAD_S = 1.0       # instruction screen before a trial
MINIGAME_TAIL_S = 1.0       # reward display after a trial
EVENT_TICK_NS = 1_000       # keeps same-move event timestamps strictly ordered


class _SessionRun:
    def __init__(self, config: SessionConfig):
        config.validate()
        self.config = config
        self.clock_ns = 0
        self.recorder = Recorder(clock=lambda: self.clock_ns)
        self.recorder.register_stream(StreamHeader(name="game", content="markers"))
        if config.synthesize_eeg:
            self.recorder.register_stream(StreamHeader(
                name="eeg", content="samples",
                channel_labels=tuple(config.synth.channels),
                sample_rate=config.synth.sample_rate, start_ns=0))
        seed = config.master_seed
        self.player_rng = substream(seed, "player")
        self.trial_rng = substream(seed, "trials")
        self.scheduler = MinigameScheduler(substream(seed, "scheduler"),
                                           config.task_weights)
        self.mi_model = None
        self.battle_index = 0
        self.trial_index = 0
        self.game: MatchGame | None = None

    # -- event plumbing -----------------------------------------------------

    def emit(self, kind: str, payload: dict, t_ns: int | None = None) -> int:
        if t_ns is None:
            self.clock_ns += EVENT_TICK_NS
            t_ns = self.clock_ns
        return self.recorder.append("game", kind, payload, t_ns=t_ns)

    def advance(self, seconds: float) -> None:
        self.clock_ns += round(seconds * 1e9)

    # -- battles --------------------------------------------------------------

    def new_battle(self, mode: GameMode,
                   carry_shot_clock: float | None = None) -> MatchGame:
        seed = substream_seed(self.config.master_seed, "battle", self.battle_index)
        self.battle_index += 1
        self.game = MatchGame(self.config.game, seed, mode=mode, emit=self.emit)
        if carry_shot_clock is not None:
            # The adaptive clock belongs to the round, not the battle; a
            # respawned robot must not relax the time pressure.
            self.game.state.shot_clock = carry_shot_clock
        return self.game

    def run(self) -> None:
        self.emit("session_start", {"session_id": self.config.session_id})
        for round_index, (mode_name, duration) in enumerate(self.config.rounds):
            mode = GameMode(mode_name)
            round_start = self.clock_ns
            round_end = round_start + round(duration * 1e9)
            self.emit("mode_start", {"mode": mode.value, "round_index": round_index,
                                     "duration_s": duration})
            self.run_round(mode, round_start, round_end)
            self.emit("mode_end", {"mode": mode.value, "round_index": round_index})
        self.emit("session_end", {})

    def run_round(self, mode: GameMode, round_start: int, round_end: int) -> None:
        game = self.new_battle(mode)

        def respawn():
            carry = game.state.shot_clock if mode is GameMode.SHOT_CLOCK else None
            return self.new_battle(mode, carry_shot_clock=carry)

        while self.clock_ns < round_end:
            game.state.elapsed = (self.clock_ns - round_start) / 1e9
            status = game.status()
            if status.over:
                if status.reason == "time_up":
                    break
                game = respawn()
                continue
            if game.state.player_hp <= 0 or game.state.enemy_hp <= 0:
                # Non-normal modes keep the round going with fresh robots.
                game = respawn()
                continue
            self.play_move(game, mode)
            if (mode is not GameMode.SHOT_CLOCK and game.minigame_due()
                    and self.clock_ns < round_end):
                self.run_minigame(game)

    def play_move(self, game: MatchGame, mode: GameMode) -> None:
        player = self.config.player
        think = player.move_time(self.player_rng)
        if mode is GameMode.SHOT_CLOCK and think >= game.state.shot_clock:
            self.advance(game.state.shot_clock)
            game.note_timeout()
            self.advance(MOVE_RESOLVE_S)
            return
        self.advance(think)
        cmd = game.find_player_swap(self.player_rng)
        resolution = game.submit_swap(cmd)
        if resolution.injected and player.notices_injection(self.player_rng):
            self.advance(player.cheat_delay(self.player_rng))
            game.report_cheat()
        self.advance(MOVE_RESOLVE_S)

    # -- mini-games -----------------------------------------------------------

    def run_minigame(self, game: MatchGame) -> None:
        selection = self.scheduler.next_minigame()
        game.begin_minigame()
        self.advance(MINIGAME_LEAD_S)
        self.trial_index += 1
        runner = {
            "rsvp": self.run_rsvp,
            "ssvep": self.run_ssvep,
            "nback": self.run_nback,
            "mi": self.run_mi,
        }[selection.task]
        runner(game, selection)
        self.advance(MINIGAME_TAIL_S)
        game.end_minigame()

    def _emit_batch(self, entries) -> int:
        """Append pre-timestamped trial events in time order; returns the last stamp."""
        last = self.clock_ns
        for t_ns, kind, payload in sorted(entries, key=lambda e: e[0]):
            self.emit(kind, payload, t_ns=t_ns)
            last = max(last, t_ns)
        return last

    def _award(self, game: MatchGame, count: int) -> list[str]:
        kinds = game.draw_powerup_kinds(count)
        game.award_powerups(kinds)
        return [k.value for k in kinds]

    def run_rsvp(self, game: MatchGame, selection: TaskSelection) -> None:
        kinds = list(POWERUP_IDS)
        self.trial_rng.shuffle(kinds)
        target_kinds = ((kinds[0], "left"), (kinds[1], "right"))
        rsvp_config = RsvpConfig(coherence_level=selection.coherence,
                                 target_kinds=target_kinds)
        schedule = build_rsvp_sequence(rsvp_config, self.trial_rng)
        t0 = self.emit("minigame_start", {
            "task": "rsvp", "trial_index": self.trial_index,
            "coherence": selection.coherence, "length": rsvp_config.length,
            "soa": rsvp_config.soa,
            "target_kinds": [list(tk) for tk in target_kinds],
        })
        responses = self.config.player.rsvp_responses(schedule, selection.coherence,
                                                      self.player_rng)
        entries = [(t0 + round(item.onset * 1e9), "stimulus_onset",
                    {"task": "rsvp", "stimulus_id": item.stimulus_id,
                     "is_target": item.is_target, "side": item.side,
                     "index": i, "coherence": selection.coherence,
                     "trial_index": self.trial_index})
                   for i, item in enumerate(schedule.items)]
        entries.extend((t0 + round(t_rel * 1e9), "response",
                        {"task": "rsvp", "side": side})
                       for t_rel, side in responses)
        last = self._emit_batch(entries)
        self.clock_ns = max(t0 + round(schedule.duration * 1e9), last + EVENT_TICK_NS)
        score = score_rsvp(schedule, responses)
        awarded = self._award(game, score.powerups)
        self.emit("minigame_end", {
            "task": "rsvp", "trial_index": self.trial_index,
            "coherence": selection.coherence, "hits": score.hits,
            "misses": score.misses, "false_alarms": score.false_alarms,
            "mean_rt": score.mean_rt, "powerups": awarded,
        })

    def run_ssvep(self, game: MatchGame, selection: TaskSelection) -> None:
        trial = build_ssvep_trial(self.trial_rng,
                                  target_frequency=selection.ssvep_target)
        t0 = self.emit("minigame_start", {
            "task": "ssvep", "trial_index": self.trial_index,
            "frequencies": list(trial.box_frequencies),
            "target_box": trial.target_box,
            "target_frequency": trial.target_frequency,
            "flash_duration": trial.flash_duration,
            "frame_rate": trial.frame_rate,
            "toggle_times": [[box, t] for box, t in trial.toggle_times],
        })
        click_rel, box = self.config.player.ssvep_click(trial, self.player_rng)
        self.emit("response", {"task": "ssvep", "box": box},
                  t_ns=t0 + round(click_rel * 1e9))
        self.clock_ns = t0 + round(click_rel * 1e9) + EVENT_TICK_NS
        score = score_ssvep(trial, (click_rel, box))
        awarded = self._award(game, score.powerups)
        self.emit("minigame_end", {
            "task": "ssvep", "trial_index": self.trial_index,
            "target_frequency": trial.target_frequency,
            "hits": score.hits, "false_alarms": score.false_alarms,
            "rt": score.mean_rt, "powerups": awarded,
        })

    def run_nback(self, game: MatchGame, selection: TaskSelection) -> None:
        trial = build_nback_sequence(selection.n, self.trial_rng)
        schedule = nback_schedule(trial)
        t0 = self.emit("minigame_start", {
            "task": "nback", "trial_index": self.trial_index, "n": selection.n,
            "length": len(trial.items), "target_count": len(trial.target_indices),
        })
        clicks = self.config.player.nback_clicks(schedule, selection.n,
                                                 self.player_rng)
        entries = [(t0 + round(item.onset * 1e9), "stimulus_onset",
                    {"task": "nback", "stimulus_id": item.stimulus_id,
                     "is_target": item.is_target, "index": i, "n": selection.n,
                     "trial_index": self.trial_index})
                   for i, item in enumerate(schedule.items)]
        entries.extend((t0 + round(t_rel * 1e9), "response", {"task": "nback"})
                       for t_rel in clicks)
        last = self._emit_batch(entries)
        self.clock_ns = max(t0 + round(schedule.duration * 1e9), last + EVENT_TICK_NS)
        score = score_nback(trial, clicks)
        awarded = self._award(game, score.powerups)
        self.emit("minigame_end", {
            "task": "nback", "trial_index": self.trial_index, "n": selection.n,
            "hits": score.hits, "misses": score.misses,
            "false_alarms": score.false_alarms, "mean_rt": score.mean_rt,
            "powerups": awarded,
        })

    def run_mi(self, game: MatchGame, selection: TaskSelection) -> None:
        direction = "left" if self.trial_rng.random() < 0.5 else "right"
        trial = MiTrial(direction=direction, execution_mode=selection.mi_mode)
        t0 = self.emit("minigame_start", {
            "task": "mi", "trial_index": self.trial_index,
            "direction": direction, "mode": selection.mi_mode,
        })
        window_ts = []
        for k in range(trial.window_count):
            t_win = t0 + round(k * trial.window_length * 1e9)
            self.emit("mi_window", {"side": direction, "mode": selection.mi_mode,
                                    "index": k, "duration_s": trial.window_length,
                                    "trial_index": self.trial_index}, t_ns=t_win)
            window_ts.append(t_win)
        self.clock_ns = t0 + round(trial.duration * 1e9)
        verdicts = self._mi_verdicts(trial, selection, window_ts, t0)
        from gemmind.minigames.motor import evaluate_mi_trial
        outcome = evaluate_mi_trial(trial, verdicts)
        game.apply_barrel(direction, outcome.passed)
        awarded = self._award(game, outcome.powerups)
        self.emit("minigame_end", {
            "task": "mi", "trial_index": self.trial_index, "direction": direction,
            "mode": selection.mi_mode, "passed": outcome.passed,
            "successes": outcome.successes,
            "feedback_levels": list(outcome.feedback_levels), "powerups": awarded,
        })

    def _mi_verdicts(self, trial: MiTrial, selection: TaskSelection,
                     window_ts: list[int], t0: int) -> list:
        player = self.config.player
        if selection.mi_mode == "execution":
            # Grasp squeezes: occasional empty windows at the stub error rate.
            return [1 + self.player_rng.randrange(3)
                    if self.player_rng.random() < 0.95 else 0
                    for _ in range(trial.window_count)]
        if not self.config.mi_use_classifier:
            return player.mi_verdict_stub(trial.window_count, self.player_rng)
        if self.mi_model is None:
            self.mi_model = train_calibrated_model(self.config.synth,
                                                   self.config.master_seed)
        # Classify this trial's windows on their own synthetic EEG. The
        # trial gets a private noise seed; ERD placement matches the
        # emitted mi_window markers.
        doc = self.config.synth.to_dict()
        doc["seed"] = substream_seed(self.config.master_seed, "mi_trial",
                                     self.trial_index)
        doc["include_blinks"] = False
        trial_synth = SynthConfig.from_dict(doc)
        rel_events = [
            MarkerEvent(t - t0, "game", "mi_window",
                        {"side": trial.direction, "duration_s": trial.window_length})
            for t in window_ts
        ]
        rec = synthesize_recording(rel_events, trial_synth,
                                   duration_s=trial.duration + 0.5)
        rate = trial_synth.sample_rate
        win = self.mi_model.window_samples
        verdicts = []
        for t in window_ts:
            i0 = round((t - t0) / 1e9 * rate)
            label, _ = mi_classify(self.mi_model, rec.data[i0:i0 + win])
            verdicts.append(label == trial.direction)
        return verdicts


def simulate_session(config: SessionConfig, out_path) -> Path:
    """Run one full session and write its archive; deterministic per seed."""
    out = Path(out_path)
    if out.exists() and any(out.iterdir()):
        raise ArchiveError(f"output path {out} is not empty")
    run = _SessionRun(config)
    run.run()

    duration_s = math.ceil(run.clock_ns / 1e9) + 1.0
    samples = {}
    if config.synthesize_eeg:
        recording = synthesize_recording(run.recorder.events, config.synth,
                                         duration_s=duration_s, start_ns=0)
        samples["eeg"] = recording.data.astype("<f4")

    return write_session_archive(
        out,
        headers=list(run.recorder.headers.values()),
        events=run.recorder.events,
        samples=samples,
        session_id=config.session_id,
        config=config.to_dict(),
    )
