"""Pressure-walkway gait assessment engine with a synthetic walker oracle.

Layered bottom-up: walkway geometry and calibration, pressure-field
analysis, temporal gait metrics, obstacle trials, the dual-task paradigm,
the walker simulator, session orchestration, and binary stream IO. The
control-channel server and CLI live in `gaitway.server` and `gaitway.cli`.
"""

__version__ = "0.1.0"

from .errors import ConfigError, RecordingError, SessionStateError
from .walkway import (
    CONTACT_THRESHOLD_G,
    FORCE_MAX_G,
    PITCH_M,
    RAW_MAX,
    TILE_COLS,
    TILE_ROWS,
    PressureFrame,
    TileSpec,
    WalkwayConfig,
    contact_mask,
    force_to_raw,
    lane_node_coords,
    node_center,
    raw_to_force,
)
from .pressure import (
    FootCluster,
    FootTrack,
    FootTracker,
    center_of_force,
    cluster_feet,
    force_distribution,
    segment_blobs,
    side_force_series,
    track_feet,
)
from .gait import (
    GaitEvent,
    GaitSummary,
    HeadKinematics,
    StepRecord,
    StrideRecord,
    detect_events,
    foot_angle,
    gait_summary,
    head_kinematics,
    step_metrics,
)
from .poses import FootPose, HeadPose
from .obstacles import (
    OBSTACLE_HEIGHTS_MM,
    ObstacleSpec,
    TrialResult,
    available_response_time,
    check_crossing,
    make_schedule,
    success_rate,
)
from .dualtask import (
    BUSY_SOUND,
    BUSY_VISUAL,
    EMPTY_VISUAL,
    QUIET_SOUND,
    LoadCondition,
    PlaybackSchedule,
    RecallScore,
    Sentence,
    SoundLevel,
    VisualLoad,
    dual_task_cost,
    load_sentence_bank,
    presented_numbers,
    schedule_sentences,
    score_recall,
)
from .simulator import (
    Scenario,
    SimulationResult,
    WalkerParams,
    apply_load_modifiers,
    plan_footfalls,
    simulate,
)
from .session import (
    ObstaclePlan,
    Recording,
    SessionConfig,
    SessionEngine,
    SessionEvent,
    SessionReport,
    compare_sessions,
    compute_report,
    run_session,
)
from .streamio import (
    BadMagicError,
    CorruptFrameError,
    TruncatedFrameError,
    UnsupportedVersionError,
    WireError,
    decode_frame,
    decode_frame_stream,
    decode_poses,
    encode_frame,
    encode_poses,
    export_heatmap,
    load_recording,
    read_pgm16,
    save_recording,
)

__all__ = [name for name in dir() if not name.startswith("_")]
