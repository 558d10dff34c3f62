"""Live game service: one UI client over WebSocket, everything recorded.

Frames are JSON text: {"type", "seq", "t_ns", "payload"}. The client
corrects its own event timestamps to server time using ping/pong round
trips, so UI markers are recorded as received. State snapshots are sent
after every command; input events are never dropped. A mini-game is
finalized lazily when the next game command arrives, which keeps the
protocol free of server-side timers.
"""

from __future__ import annotations

import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from gemmind.errors import ContractError
from gemmind.game.engine import GameMode, MatchGame, SwapCommand
from gemmind.minigames.motor import MiTrial, evaluate_mi_trial
from gemmind.minigames.nback import build_nback_sequence, nback_schedule, score_nback
from gemmind.minigames.rsvp import RsvpConfig, build_rsvp_sequence, score_rsvp
from gemmind.minigames.scheduler import MinigameScheduler
from gemmind.minigames.ssvep import build_ssvep_trial, score_ssvep
from gemmind.minigames.types import POWERUP_IDS
from gemmind.rng import substream
from gemmind.session.config import SessionConfig
from gemmind.timeline.archive import write_session_archive
from gemmind.timeline.events import Recorder, StreamHeader


class _Connection:
    """Per-client session state; all access is serialized by the socket loop."""

    def __init__(self, config: SessionConfig, record_path: Path):
        self.config = config
        self.record_path = record_path
        self.recorder = Recorder(clock=time.monotonic_ns)
        self.recorder.register_stream(StreamHeader(name="game", content="markers"))
        self.recorder.register_stream(StreamHeader(
            name="ui", content="markers", source_clock="client_corrected"))
        seed = config.master_seed
        self.game = MatchGame(config.game, seed,
                              mode=GameMode(config.rounds[0][0]),
                              emit=lambda kind, payload:
                              self.recorder.append("game", kind, payload))
        self.scheduler = MinigameScheduler(substream(seed, "scheduler"),
                                           config.task_weights)
        self.trial_rng = substream(seed, "trials")
        self.seq = 0
        self.active = None          # (selection, trial, schedule, start_ns)
        self.responses: list = []

    def frame(self, type_: str, payload: dict) -> dict:
        self.seq += 1
        return {"type": type_, "seq": self.seq,
                "t_ns": time.monotonic_ns(), "payload": payload}

    def hello(self) -> dict:
        return self.frame("hello", {
            "session_id": self.config.session_id,
            "config": self.config.to_dict(),
            "streams": [h.to_dict() for h in self.recorder.headers.values()],
            "state": self.game.state.snapshot(),
        })

    # -- mini-game lifecycle --------------------------------------------------

    def start_minigame(self) -> dict:
        selection = self.scheduler.next_minigame()
        self.game.begin_minigame()
        payload: dict = {"task": selection.task}
        schedule = None
        if selection.task == "rsvp":
            kinds = list(POWERUP_IDS)
            self.trial_rng.shuffle(kinds)
            trial = RsvpConfig(coherence_level=selection.coherence,
                               target_kinds=((kinds[0], "left"), (kinds[1], "right")))
            schedule = build_rsvp_sequence(trial, self.trial_rng)
            payload.update(coherence=selection.coherence, soa=schedule.soa,
                           items=[{"onset": it.onset, "stimulus_id": it.stimulus_id,
                                   "is_target": it.is_target, "side": it.side}
                                  for it in schedule.items])
        elif selection.task == "ssvep":
            trial = build_ssvep_trial(self.trial_rng,
                                      target_frequency=selection.ssvep_target)
            payload.update(frequencies=list(trial.box_frequencies),
                           target_box=trial.target_box,
                           target_frequency=trial.target_frequency,
                           flash_duration=trial.flash_duration,
                           toggle_times=[[b, t] for b, t in trial.toggle_times])
        elif selection.task == "nback":
            trial = build_nback_sequence(selection.n, self.trial_rng)
            schedule = nback_schedule(trial)
            payload.update(n=selection.n, soa=schedule.soa,
                           items=[{"onset": it.onset, "stimulus_id": it.stimulus_id,
                                   "is_target": it.is_target}
                                  for it in schedule.items])
        else:
            direction = "left" if self.trial_rng.random() < 0.5 else "right"
            trial = MiTrial(direction=direction, execution_mode=selection.mi_mode)
            payload.update(direction=direction, mode=selection.mi_mode,
                           duration=trial.duration,
                           window_length=trial.window_length)
        self.recorder.append("game", "minigame_start", payload)
        self.active = (selection, trial, schedule, time.monotonic_ns())
        self.responses = []
        return self.frame("minigame_start", payload)

    def finish_minigame(self) -> dict:
        selection, trial, schedule, start_ns = self.active
        self.active = None
        rel = [((t - start_ns) / 1e9, extra) for t, extra in self.responses]

        if selection.task == "mi":
            verdicts = [bool(e.get("success")) for _, e in rel][:trial.window_count]
            verdicts += [False] * (trial.window_count - len(verdicts))
            outcome = evaluate_mi_trial(trial, verdicts)
            self.game.apply_barrel(trial.direction, outcome.passed)
            powerups = outcome.powerups
            payload = {"task": "mi", "passed": outcome.passed,
                       "successes": outcome.successes}
        else:
            if selection.task == "rsvp":
                score = score_rsvp(schedule, [(t, e.get("side")) for t, e in rel])
            elif selection.task == "ssvep":
                click = (rel[0][0], rel[0][1].get("box", -1)) if rel else (0.0, -1)
                score = score_ssvep(trial, click)
            else:
                score = score_nback(trial, [t for t, _ in rel])
            powerups = score.powerups
            payload = {"task": selection.task, "hits": score.hits,
                       "misses": score.misses, "false_alarms": score.false_alarms,
                       "mean_rt": score.mean_rt}

        self.game.end_minigame()
        kinds = [k.value for k in self.game.draw_powerup_kinds(powerups)]
        self.game.award_powerups(kinds)
        payload["powerups"] = kinds
        self.recorder.append("game", "minigame_end", payload)
        return self.frame("minigame_result", payload)

    def finalize(self) -> None:
        write_session_archive(
            self.record_path,
            headers=list(self.recorder.headers.values()),
            events=self.recorder.events,
            samples={},
            session_id=self.config.session_id,
            config=self.config.to_dict(),
            clock_offsets=self.recorder.clock_offsets,
        )


def handle_message(conn: _Connection, message: dict) -> tuple[list[dict], bool]:
    """Process one client frame. Returns (frames to send, keep_going)."""
    if not isinstance(message, dict) or "type" not in message:
        return [conn.frame("end", {"reason": "bad_frame"})], False
    mtype = message.get("type")
    payload = message.get("payload") or {}
    now = time.monotonic_ns()

    if mtype == "time_ping":
        return [conn.frame("time_pong", {
            "t_send": payload.get("t_send"),
            "t_remote_recv": now,
            "t_remote_send": time.monotonic_ns(),
        })], True

    if mtype == "move":
        out = []
        if conn.active is not None:
            out.append(conn.finish_minigame())
        if payload.get("timeout"):
            conn.game.note_timeout()
            result = {"timeout": True, "shot_clock": conn.game.state.shot_clock}
        else:
            try:
                cmd = SwapCommand(tuple(payload["cell_a"]), tuple(payload["cell_b"]),
                                  issued_at_ns=message.get("t_ns", now))
                resolution = conn.game.submit_swap(cmd)
            except (ContractError, KeyError, TypeError) as e:
                out.append(conn.frame("end", {"reason": f"protocol: {e}"}))
                return out, False
            result = {"valid": resolution.valid, "injected": resolution.injected,
                      "points": resolution.points, "damage": resolution.damage,
                      "cascade_sizes": resolution.cascade_sizes}
        out.append(conn.frame("move_result", result))
        out.append(conn.frame("state", conn.game.state.snapshot()))
        if conn.game.minigame_due() and conn.active is None:
            out.append(conn.start_minigame())
        return out, True

    if mtype == "cheat_report":
        out = []
        if conn.active is not None:
            out.append(conn.finish_minigame())
        outcome = conn.game.report_cheat()
        out.append(conn.frame("move_result", {
            "cheat_valid": outcome.valid_report,
            "powerups": [k.value for k in outcome.powerup_kinds],
        }))
        out.append(conn.frame("state", conn.game.state.snapshot()))
        if conn.game.minigame_due() and conn.active is None:
            out.append(conn.start_minigame())
        return out, True

    if mtype == "response":
        t_ns = message.get("t_ns", now)
        conn.recorder.append("ui", "response", payload, t_ns=t_ns)
        if conn.active is not None:
            conn.responses.append((t_ns, payload))
        return [], True

    if mtype == "stimulus_flip_report":
        t_ns = message.get("t_ns", now)
        conn.recorder.append("ui", "flip_report", payload, t_ns=t_ns)
        actual = payload.get("actual_t_ns")
        stimulus = payload.get("stimulus")
        if actual is not None and isinstance(stimulus, dict):
            conn.recorder.append("ui", "stimulus_onset", stimulus, t_ns=actual)
        return [], True

    if mtype == "end":
        return [], False

    return [conn.frame("end", {"reason": "unknown_type"})], False


def create_app(config: SessionConfig, record_path) -> FastAPI:
    config.validate()
    app = FastAPI(title="gemmind game service")
    state = {"busy": False, "connections": 0}
    record_root = Path(record_path)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        if state["busy"]:
            await ws.send_json({"type": "end", "seq": 0, "t_ns": time.monotonic_ns(),
                                "payload": {"reason": "busy"}})
            await ws.close()
            return
        state["busy"] = True
        state["connections"] += 1
        conn = _Connection(config, record_root / f"live-{state['connections']:03d}")
        conn.recorder.append("game", "session_start",
                             {"session_id": config.session_id})
        try:
            await ws.send_json(conn.hello())
            keep_going = True
            while keep_going:
                try:
                    message = await ws.receive_json()
                except ValueError:
                    await ws.send_json(conn.frame("end", {"reason": "bad_frame"}))
                    break
                frames, keep_going = handle_message(conn, message)
                for item in frames:
                    await ws.send_json(item)
        except WebSocketDisconnect:
            pass
        finally:
            conn.recorder.append("game", "session_end", {})
            conn.finalize()
            state["busy"] = False
            try:
                await ws.close()
            except RuntimeError:
                pass

    return app
