"""Victim-count extraction toolkit for crisis-event text.

Three rule-based extractors (surface patterns, dependency rules, SRL
frame rules) pull numeric victim counts out of event descriptions;
around them sit count-aware metrics, confidence calibration, corpus
splitting, and an experiment harness with report emission.
"""

from .annotations import (
    ParsedDocument,
    SrlArgument,
    SrlFrame,
    Token,
    read_frames,
    read_parses,
    write_frames,
    write_parses,
)
from .calibration import (
    CalibrationBin,
    IsotonicCalibrator,
    PredictionSet,
    TemperatureCalibrator,
    apply_calibrator,
    classification_confidence,
    ece,
    ece_from_bins,
    fit_isotonic,
    fit_temperature,
    fit_temperature_generation,
    gen_confidence,
    generation_confidence,
    load_calibrator,
    load_predictions,
    pava,
    quantile_of_truth,
    reg_ce,
    reliability_diagram,
    save_calibrator,
)
from .corpus import (
    FEWSHOT_FRACTIONS,
    DatasetSchema,
    EventRecord,
    SplitPlan,
    fewshot_subset,
    load_dataset,
    make_splits,
    ood_pairs,
)
from .errors import (
    AnnotationError,
    CalibrationError,
    ConfigError,
    DataFormatError,
    RunnerError,
    ToolkitError,
    UnsupportedVictimTypeError,
)
from .extractors import (
    DEFAULT_LEXICONS,
    Extraction,
    Lexicon,
    build_lexicon,
    extract_dependency,
    extract_regex,
    extract_srl,
    read_lexicon,
)
from .harness import (
    CommandRunner,
    RuleRunner,
    Task,
    emit_timeline,
    run_calibration_experiment,
    run_extraction,
    run_fewshot,
    run_ood,
    write_report,
)
from .metrics import (
    FOUR_BIN,
    SCHEMES,
    THREE_CLASS,
    BinningScheme,
    ScoreReport,
    bin_count,
    confusion_matrix,
    digit_f1,
    exact_match,
    macro_prf,
    mse_log,
    pinball_loss,
    score_counts,
    score_strings,
)
from .numerals import find_count_tokens, normalize_numerals, parse_count_token

__version__ = "0.1.0"
