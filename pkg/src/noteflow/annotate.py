"""Change-purpose and data-science-step labeling.

Two labeling tasks sit on top of the transition sequence:

* every transition gets a set of *purpose* labels describing why the
  code changed between the two executions (eleven core labels, plus an
  open slot for labels a backend model may invent);
* every cell source gets exactly one *data-science step* label out of a
  fixed ten-class scheme.

Both have deterministic rule implementations, pure functions of the
text (plus the prior output kind for error-context purposes).  An
external chat-completion backend can be plugged in for purposes on
self-transitions; its answers are reconciled against the mechanical
rules — string equality is always authoritative for ``no_change`` — and
every raw response is archived for audit.
"""

from __future__ import annotations

import difflib
import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import requests

from . import lex
from .events import OUTPUT_ERROR
from .transitions import KIND_SELF, Transition, normalized_edit_distance

# --- Purpose labels (closed core set, fixed reporting order) --------------

NO_CHANGE = "no_change"
EXPLORE_VARIABLE = "explore_variable"
FIX = "fix"
DEBUG = "debug"
EDIT_CODE = "edit_code"
CLEAN_CODE = "clean_code"
VISUALIZE_DATA = "visualize_data"
EXTEND_CODE = "extend_code"
IMPROVE_READABILITY = "improve_readability"
COMMENT = "comment"
UNCOMMENT = "uncomment"

PURPOSE_LABELS = (
    NO_CHANGE, EXPLORE_VARIABLE, FIX, DEBUG, EDIT_CODE, CLEAN_CODE,
    VISUALIZE_DATA, EXTEND_CODE, IMPROVE_READABILITY, COMMENT, UNCOMMENT,
)

# Labels whose rules are purely mechanical (string/line arithmetic); used
# to measure backend agreement where the ground truth is certain.
MECHANICAL_PURPOSES = frozenset({NO_CHANGE, COMMENT, UNCOMMENT, CLEAN_CODE})

# --- Data-science steps (fixed order: most to least frequent) -------------

DATA_PREPROCESSING = "data_preprocessing"
DATA_EXPLORATION = "data_exploration"
COMMENT_ONLY = "comment_only"
MODELLING = "modelling"
HELPER_FUNCTIONS = "helper_functions"
LOAD_DATA = "load_data"
EVALUATION = "evaluation"
PREDICTION = "prediction"
RESULT_VISUALIZATION = "result_visualization"
SAVE_RESULTS = "save_results"

DS_STEPS = (
    DATA_PREPROCESSING, DATA_EXPLORATION, COMMENT_ONLY, MODELLING,
    HELPER_FUNCTIONS, LOAD_DATA, EVALUATION, PREDICTION,
    RESULT_VISUALIZATION, SAVE_RESULTS,
)

# --- Token vocabularies for the lexical detectors --------------------------

_PLOT_TOKENS = (
    "plt.", "sns.", ".plot(", ".plot.", ".hist(", ".scatter(", ".bar(",
    ".barh(", ".boxplot(", ".pie(", "plotly", "heatmap(", "pairplot(",
    "displot(", "countplot(", "lineplot(", "barplot(", "scatterplot(",
    "histplot(", "regplot(", "jointplot(", "altair", "bokeh", ".show(",
    "figure(", "subplots(",
)
# Library configuration that merely mentions a plotting namespace.
_CONFIG_TOKENS = (
    "set_option(", "rcParams", "plt.style", "sns.set", "set_theme(",
    "filterwarnings(", "warnings.", "random.seed(", "set_printoptions(",
    "matplotlib inline", "%matplotlib",
)
_READ_TOKENS = (
    "read_csv(", "read_json(", "read_excel(", "read_parquet(", "read_table(",
    "read_sql", "read_pickle(", "read_html(", "read_feather(", "read_hdf(",
    "loadtxt(", "genfromtxt(", "load_dataset(", "np.load(", "numpy.load(",
    "json.load(", "pickle.load(", "joblib.load(", "torch.load(",
    "load_iris(", "load_digits(", "load_wine(", "fetch_openml(",
    "urlretrieve(", "load_breast_cancer(",
)
_WRITE_TOKENS = (
    "to_csv(", "to_json(", "to_excel(", "to_parquet(", "to_pickle(",
    "to_feather(", "to_sql(", "to_hdf(", "savefig(", "np.save(",
    "numpy.save(", "savetxt(", "json.dump(", "pickle.dump(",
    "joblib.dump(", "torch.save(", ".write(", "write_text(", "write_bytes(",
)
_FIT_TOKENS = (
    ".fit(", ".fit_generator(", ".train(", "GridSearchCV(",
    "RandomizedSearchCV(", "Sequential(", ".compile(", "LinearRegression(",
    "LogisticRegression(", "RandomForest", "GradientBoosting", "XGB",
    "LGBM", "CatBoost", "KMeans(", "SVC(", "SVR(", "DecisionTree",
    "KNeighbors", "MLPClassifier(", "MLPRegressor(", "Ridge(", "Lasso(",
    "ElasticNet(", "GaussianNB(", "AdaBoost",
)
_EVAL_TOKENS = (
    "accuracy_score(", "f1_score(", "precision_score(", "recall_score(",
    "roc_auc", "mean_squared_error(", "mean_absolute_error(", "r2_score(",
    "classification_report(", "confusion_matrix(", "cross_val_score(",
    "cross_validate(", ".score(", ".evaluate(", "log_loss(",
    "silhouette_score(", "balanced_accuracy",
)
_PREDICT_TOKENS = (".predict(", ".predict_proba(", ".predict_log_proba(", ".forecast(")
_INSPECT_TOKENS = (
    "print(", "display(", ".head(", ".tail(", ".shape", ".dtypes",
    ".describe(", ".info(", "type(", "len(", ".value_counts(", ".nunique(",
    ".unique(", ".isnull(", ".isna(", ".sample(", ".corr(", "pdb",
    "%debug", "traceback",
)
_STATEMENT_PREFIXES = (
    "def ", "class ", "import ", "from ", "for ", "while ", "if ", "elif ",
    "else", "with ", "try", "except", "finally", "return", "yield",
    "raise ", "del ", "assert ", "global ", "nonlocal ", "pass", "break",
    "continue", "@", "%", "!",
)
_HELPER_PREFIXES = ("import ", "from ", "def ", "class ", "@", "%", "!")


def _contains(line: str, tokens: Sequence[str]) -> bool:
    return any(token in line for token in tokens)


def _is_config_line(line: str) -> bool:
    return _contains(line, _CONFIG_TOKENS)


def _is_plot_line(line: str) -> bool:
    if _is_config_line(line):
        return False
    return _contains(line, _PLOT_TOKENS)


def _is_statement_line(stripped: str) -> bool:
    return any(stripped.startswith(p) for p in _STATEMENT_PREFIXES)


def _is_display_line(raw_line: str) -> bool:
    """A bare expression/print that shows a value without binding anything."""
    masked = lex.mask_strings(raw_line)
    stripped = masked.strip()
    if not stripped or stripped.startswith("#"):
        return False
    if _is_statement_line(stripped):
        return False
    if lex.has_assignment(masked):
        return False
    return True


# --- Cell features ----------------------------------------------------------

_URL_RE = re.compile(r"https?://")
_STRING_RE = re.compile(r"['\"]")


@dataclass
class CellFeatures:
    """Lexical summary of one cell's source."""

    lines_of_code: int
    code_line_count: int
    comment_line_count: int
    unique_variables: int
    has_import: bool
    has_plot_call: bool
    has_fit_call: bool
    has_read_call: bool
    has_write_call: bool
    has_string_literal: bool
    has_url_literal: bool

    def to_dict(self) -> dict:
        return {
            "lines_of_code": self.lines_of_code,
            "code_line_count": self.code_line_count,
            "comment_line_count": self.comment_line_count,
            "unique_variables": self.unique_variables,
            "has_import": self.has_import,
            "has_plot_call": self.has_plot_call,
            "has_fit_call": self.has_fit_call,
            "has_read_call": self.has_read_call,
            "has_write_call": self.has_write_call,
            "has_string_literal": self.has_string_literal,
            "has_url_literal": self.has_url_literal,
        }


def _has_read_call(line: str) -> bool:
    if _contains(line, _READ_TOKENS):
        return True
    if "open(" in line and not _has_write_call(line):
        return True
    return False


def _has_write_call(line: str) -> bool:
    if _contains(line, _WRITE_TOKENS):
        return True
    if "open(" in line and re.search(r"open\([^)]*['\"][wa]b?['\"]", line):
        return True
    return False


def extract_features(cell_source: str) -> CellFeatures:
    """Tokenize a cell lexically; never fails on unparseable text."""
    code_lines, comment_lines = lex.classify_lines(cell_source)
    non_blank = sum(1 for line in cell_source.split("\n") if line.strip())
    return CellFeatures(
        lines_of_code=non_blank,
        code_line_count=len(code_lines),
        comment_line_count=len(comment_lines),
        unique_variables=len(lex.identifiers(cell_source)),
        has_import=any(line.lstrip().startswith(("import ", "from "))
                       for line in code_lines),
        has_plot_call=any(_is_plot_line(line) for line in code_lines),
        has_fit_call=any(_contains(line, _FIT_TOKENS) for line in code_lines),
        has_read_call=any(_has_read_call(line) for line in code_lines),
        has_write_call=any(_has_write_call(line) for line in code_lines),
        has_string_literal=bool(_STRING_RE.search(cell_source)),
        has_url_literal=bool(_URL_RE.search(cell_source)),
    )


# --- Purpose rules ----------------------------------------------------------

_COMMENT_MARKER_RE = re.compile(r"^(\s*)#\s?(.*)$")


def _uncommented(line: str) -> str | None:
    """The line with one leading comment marker removed, or None."""
    m = _COMMENT_MARKER_RE.match(line)
    if m is None:
        return None
    return m.group(1) + m.group(2)


def _lines(text: str) -> list[str]:
    return text.splitlines()


def _is_pure_commenting(before: list[str], after: list[str]) -> bool:
    if len(before) != len(after) or before == after:
        return False
    changed = 0
    for b, a in zip(before, after):
        if b == a:
            continue
        if _uncommented(a) == b:
            changed += 1
            continue
        return False
    return changed > 0


def _is_pure_uncommenting(before: list[str], after: list[str]) -> bool:
    return _is_pure_commenting(after, before)


def _is_subsequence(needle: list[str], haystack: list[str]) -> bool:
    it = iter(haystack)
    return all(any(x == y for y in it) for x in needle)


def _new_lines(before: list[str], after: list[str]) -> list[str]:
    """Lines on the after side of every replace/insert block."""
    matcher = difflib.SequenceMatcher(a=before, b=after, autojunk=False)
    fresh: list[str] = []
    for op, _i1, _i2, j1, j2 in matcher.get_opcodes():
        if op in ("replace", "insert"):
            fresh.extend(after[j1:j2])
    return fresh


def rule_purposes(before: str, after: str, prior_output_kind: str | None = None) -> set[str]:
    """Deterministic purpose labels for one code transition.

    An ordered decision list over the diff: exact equality, pure
    commenting/uncommenting, pure deletion, whitespace-only formatting;
    then — only with an error on screen (``prior_output_kind``) —
    added-inspection means debugging and a small change means a fix;
    then display-only additions, plot edits, state-changing additions,
    and finally the general code edit.  Always returns one label.
    """
    if before == after:
        return {NO_CHANGE}

    before_lines = _lines(before)
    after_lines = _lines(after)

    if _is_pure_commenting(before_lines, after_lines):
        return {COMMENT}
    if _is_pure_uncommenting(before_lines, after_lines):
        return {UNCOMMENT}
    if len(after_lines) < len(before_lines) and _is_subsequence(after_lines, before_lines):
        return {CLEAN_CODE}
    if lex.normalize_whitespace(before) == lex.normalize_whitespace(after):
        return {IMPROVE_READABILITY}

    fresh = _new_lines(before_lines, after_lines)
    meaningful = [line for line in fresh if line.strip() and not line.strip().startswith("#")]

    if prior_output_kind == OUTPUT_ERROR:
        if any(_contains(line, _INSPECT_TOKENS) and not lex.has_assignment(lex.mask_strings(line))
               for line in meaningful):
            return {DEBUG}
        if normalized_edit_distance(before, after) < 0.15:
            return {FIX}

    if meaningful and all(_is_display_line(line) and not _is_plot_line(line)
                          for line in meaningful):
        return {EXPLORE_VARIABLE}
    if any(_is_plot_line(line) for line in meaningful):
        return {VISUALIZE_DATA}
    if (len(after_lines) > len(before_lines)
            and _is_subsequence(before_lines, after_lines)
            and any(lex.has_assignment(lex.mask_strings(line)) or _is_statement_line(line.strip())
                    for line in meaningful)):
        return {EXTEND_CODE}
    return {EDIT_CODE}


# --- Data-science step rule -------------------------------------------------

def ds_step(cell_source: str, features: CellFeatures | None = None) -> str:
    """Single data-science-step label for one cell source.

    Ordered first-match scoring: comment-only cells, then unambiguous
    I/O evidence (load/save), plotting, helper/config cells, model
    fitting, metric calls, predict calls, exploration dominance, and
    the preprocessing catch-all.
    """
    if features is None:
        features = extract_features(cell_source)
    code_lines, _comments = lex.classify_lines(cell_source)
    if not code_lines:
        return COMMENT_ONLY
    if features.has_read_call:
        return LOAD_DATA
    if features.has_write_call:
        return SAVE_RESULTS
    if features.has_plot_call:
        return RESULT_VISUALIZATION

    top_level = [line for line in code_lines if not line[:1].isspace()]
    def _is_helper(line: str) -> bool:
        stripped = line.strip()
        return stripped.startswith(_HELPER_PREFIXES) or _is_config_line(line)
    if top_level and all(_is_helper(line) for line in top_level):
        return HELPER_FUNCTIONS

    if features.has_fit_call:
        return MODELLING
    if any(_contains(line, _EVAL_TOKENS) for line in code_lines):
        return EVALUATION
    if any(_contains(line, _PREDICT_TOKENS) for line in code_lines):
        return PREDICTION

    display = sum(1 for line in code_lines
                  if _is_display_line(line) or
                  (_contains(line, _INSPECT_TOKENS) and not lex.has_assignment(lex.mask_strings(line))))
    if 2 * display >= len(code_lines):
        return DATA_EXPLORATION
    return DATA_PREPROCESSING


# --- Backend client ---------------------------------------------------------

class AnnotationClient(Protocol):
    """Anything that can answer a (system, user) chat prompt with text."""

    def complete(self, system: str, user: str) -> str: ...


class HttpAnnotationClient:
    """Chat-completions client for an OpenAI-compatible endpoint."""

    def __init__(self, base_url: str, token: str | None = None,
                 model: str = "gpt-4o", timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.model = model
        self.timeout = timeout

    def complete(self, system: str, user: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        response = requests.post(
            f"{self.base_url}/chat/completions",
            json={
                "model": self.model,
                "temperature": 0,
                "messages": [
                    {"role": "system", "content": system},
                    {"role": "user", "content": user},
                ],
            },
            headers=headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]


@dataclass
class PromptBundle:
    system: str
    user_template: str
    prompt_hash: str


def load_prompts(directory: str | Path | None = None) -> PromptBundle:
    """Load the versioned prompt pair and hash it for audit trails."""
    if directory is not None:
        base = Path(directory)
        system = (base / "purpose_system.txt").read_text(encoding="utf-8")
        user_template = (base / "purpose_user.txt").read_text(encoding="utf-8")
    else:
        package_dir = resources.files(__package__).joinpath("prompts")
        system = (package_dir / "purpose_system.txt").read_text(encoding="utf-8")
        user_template = (package_dir / "purpose_user.txt").read_text(encoding="utf-8")
    digest = hashlib.sha256()
    digest.update(system.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(user_template.encode("utf-8"))
    return PromptBundle(system=system, user_template=user_template,
                        prompt_hash=digest.hexdigest())


_LABEL_TOKEN_RE = re.compile(r"^[a-z][a-z0-9_]*$")


def parse_backend_labels(raw: str) -> set[str]:
    """Extract label tokens from a backend response.

    Accepts a JSON array anywhere in the text, else falls back to
    splitting on commas/newlines.  Tokens are normalized to snake_case.
    Labels outside the core scheme are kept when they arrive in the
    structured array (open extension slot); the free-text fallback only
    trusts tokens naming known labels, so prose never turns into labels.
    Raises ValueError when nothing parseable remains.
    """
    candidates: list[str] = []
    structured = False
    match = re.search(r"\[.*?\]", raw, flags=re.DOTALL)
    if match:
        try:
            doc = json.loads(match.group(0))
            if isinstance(doc, list):
                candidates = [str(x) for x in doc]
                structured = True
        except json.JSONDecodeError:
            candidates = []
    if not candidates:
        candidates = re.split(r"[,\n;]+", raw)

    labels: set[str] = set()
    for candidate in candidates:
        token = candidate.strip().strip("\"'`.").lower().replace(" ", "_").replace("-", "_")
        if not token or not _LABEL_TOKEN_RE.match(token):
            continue
        if structured or token in PURPOSE_LABELS:
            labels.add(token)
    if not labels:
        raise ValueError("no labels found in backend response")
    return labels


def backend_purposes(transition: Transition, client: AnnotationClient,
                     prompts: PromptBundle | None = None) -> tuple[set[str], str]:
    """Ask the backend to label one transition; returns (labels, raw)."""
    if prompts is None:
        prompts = load_prompts()
    user = prompts.user_template.format(
        before=transition.from_source,
        after=transition.to_source,
        prior_output_kind=transition.from_output_kind,
    )
    raw = client.complete(prompts.system, user)
    return parse_backend_labels(raw), raw


# --- Annotation driver ------------------------------------------------------

SOURCE_RULE = "rule"
SOURCE_BACKEND = "backend"
SOURCE_RECONCILED = "reconciled"


@dataclass
class AnnotatedTransition:
    transition: Transition
    purposes: set[str]
    purpose_source: str
    from_step: str
    to_step: str

    def to_dict(self) -> dict:
        return {
            "index": self.transition.index,
            "kind": self.transition.kind,
            "purposes": sorted(self.purposes),
            "purpose_source": self.purpose_source,
            "from_step": self.from_step,
            "to_step": self.to_step,
        }


@dataclass
class AnnotationResult:
    annotations: list[AnnotatedTransition]
    audit: dict = field(default_factory=dict)


def _reconcile(rule_labels: set[str], backend_labels: set[str],
               identical: bool) -> tuple[set[str], str]:
    """Merge backend labels with the mechanical ground truth.

    String equality owns ``no_change``: identical sources always end up
    as exactly {no_change}; differing sources never keep it.  A backend
    left with nothing after that loses to the rules.
    """
    if identical:
        if backend_labels == {NO_CHANGE}:
            return {NO_CHANGE}, SOURCE_BACKEND
        return {NO_CHANGE}, SOURCE_RECONCILED
    cleaned = set(backend_labels) - {NO_CHANGE}
    if not cleaned:
        return set(rule_labels), SOURCE_RECONCILED
    if cleaned != backend_labels:
        return cleaned, SOURCE_RECONCILED
    return cleaned, SOURCE_BACKEND


def annotate_transitions(transitions: Sequence[Transition],
                         client: AnnotationClient | None = None,
                         prompts: PromptBundle | None = None) -> AnnotationResult:
    """Label every transition with purposes and both step labels.

    Purposes are computed mechanically for all transitions; when a
    backend client is supplied it is additionally consulted for
    self-transitions (the only ones whose before/after pair describes
    one evolving piece of code).  Backend failures fall back to rules: a
    response that cannot be parsed is retried once, and every exchange
    lands in the audit trail.  Results are keyed by transition index and
    independent of processing order.
    """
    if client is not None and prompts is None:
        prompts = load_prompts()

    annotations: list[AnnotatedTransition] = []
    responses: list[dict] = []
    n_backend = 0
    n_fallback = 0
    n_reconciled = 0
    mechanical_total = 0
    mechanical_agreed = 0

    for transition in transitions:
        rule_labels = rule_purposes(transition.from_source, transition.to_source,
                                    prior_output_kind=transition.from_output_kind)
        purposes = set(rule_labels)
        source = SOURCE_RULE

        if client is not None and transition.kind == KIND_SELF:
            backend_labels: set[str] | None = None
            raw = None
            error = None
            for _attempt in range(2):
                try:
                    backend_labels, raw = backend_purposes(transition, client, prompts)
                    error = None
                    break
                except ValueError as exc:   # unparsable — retry once
                    error = str(exc)
                    continue
                except Exception as exc:    # transport/HTTP — no retry value
                    error = str(exc)
                    break
            if backend_labels is not None:
                identical = transition.from_source == transition.to_source
                purposes, source = _reconcile(rule_labels, backend_labels, identical)
                n_backend += 1
                if source == SOURCE_RECONCILED:
                    n_reconciled += 1
                if rule_labels & MECHANICAL_PURPOSES:
                    mechanical_total += 1
                    if rule_labels & backend_labels:
                        mechanical_agreed += 1
            else:
                n_fallback += 1
            responses.append({
                "index": transition.index,
                "raw": raw,
                "parsed": sorted(backend_labels) if backend_labels is not None else None,
                "rule_labels": sorted(rule_labels),
                "error": error,
            })

        annotations.append(AnnotatedTransition(
            transition=transition,
            purposes=purposes,
            purpose_source=source,
            from_step=ds_step(transition.from_source),
            to_step=ds_step(transition.to_source),
        ))

    audit = {
        "backend_used": client is not None,
        "prompt_hash": prompts.prompt_hash if prompts is not None else None,
        "n_transitions": len(annotations),
        "n_backend": n_backend,
        "n_fallback": n_fallback,
        "n_reconciled": n_reconciled,
        "mechanical_total": mechanical_total,
        "mechanical_agreed": mechanical_agreed,
        "mechanical_agreement": (mechanical_agreed / mechanical_total
                                 if mechanical_total else None),
        "responses": responses,
    }
    return AnnotationResult(annotations=annotations, audit=audit)


# --- Serialization ----------------------------------------------------------

def write_annotations(path: str | Path, annotations: Iterable[AnnotatedTransition],
                      meta: dict | None = None) -> None:
    from .jsonl import write_jsonl

    write_jsonl(path, (a.to_dict() for a in annotations), meta=meta)


def read_annotations(path: str | Path, transitions: Sequence[Transition]) -> list[AnnotatedTransition]:
    """Rejoin an annotations file with its transitions (by index)."""
    from .jsonl import read_jsonl

    by_index = {t.index: t for t in transitions}
    out: list[AnnotatedTransition] = []
    for doc in read_jsonl(path):
        transition = by_index[doc["index"]]
        out.append(AnnotatedTransition(
            transition=transition,
            purposes=set(doc["purposes"]),
            purpose_source=doc["purpose_source"],
            from_step=doc["from_step"],
            to_step=doc["to_step"],
        ))
    return out


def write_audit(path: str | Path, audit: dict, meta: dict | None = None) -> None:
    from .jsonl import write_jsonl

    summary = {k: v for k, v in audit.items() if k != "responses"}
    rows = [{"summary": summary}] + [{"response": r} for r in audit.get("responses", [])]
    write_jsonl(path, rows, meta=meta)
