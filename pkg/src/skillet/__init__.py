"""skillet: interactive kitchen-task learning, planning and assistance engine."""

from .world import (
    Literal,
    ObjectInstance,
    PrimitiveAction,
    TypeTree,
    WorldState,
    apply_action,
    diff_states,
    lit,
    load_domain,
    load_domain_file,
    serialize_domain,
    tick_devices,
)
from .episodes import ActionEvent, Episode, EpisodeRecorder, involved_objects
from .skills import KnowledgeBase, SkillSchema, generalize, induce_skill, replay_check
from .curiosity import (
    Hypothesis,
    QuestionEvent,
    apply_answer,
    generate_hypotheses,
    pose_question,
    rank_hypotheses,
)
from .planning import (
    Goal,
    GroundOperator,
    Plan,
    PlannerConfig,
    ground_skill,
    parse_goal,
    plan,
    replan_excluding,
    simulate_plan,
)
from .assist import (
    GoalEntry,
    GoalLibrary,
    HumanModel,
    InterventionProposal,
    apply_intervention,
    ergonomic_cost,
    infer_goal,
    predict_next_action,
    propose_intervention,
)
from .session import Session, SessionConfig, run_script, serve

__version__ = "0.1.0"
