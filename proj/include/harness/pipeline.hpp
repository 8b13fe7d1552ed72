#pragma once

#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "harness/grading.hpp"
#include "harness/kb.hpp"
#include "harness/llm.hpp"
#include "harness/problem.hpp"

namespace harness {

class PlanError : public std::runtime_error {
public:
    explicit PlanError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class PipelineKind { Vanilla, Guided, GrammarRag, SingleAgentRounds, MoA };

std::string to_string(PipelineKind k);
PipelineKind pipeline_kind_from_string(const std::string& s);

struct PipelineConfig {
    PipelineKind kind = PipelineKind::Vanilla;
    std::vector<std::string> solver_models;  // length N (or 1, broadcast) for MoA round 1
    std::string aggregator_model;
    int n = 1;
    int m = 1;
    int r = 0;
    int rounds = 0;  // 0 -> derived; MoA requires rounds == R + 2
    double temperature = 0.75;
    std::optional<std::filesystem::path> guide_path;
    int parallelism = 4;
    int kb_top_k = 5;
    int kb_brief_max_tokens = 512;
    std::string kb_embed_model = "stub:hash64";

    /// Normalizes derived fields and enforces the per-kind invariants.
    void validate();
};

enum class AgentRole { Solver, Aggregator, FinalAggregator, GrammarAgent };

std::string to_string(AgentRole r);

struct CallNode {
    std::string node_id;
    int round_index = 1;  // grammar agent sits at round 0
    AgentRole role = AgentRole::Solver;
    std::string model_id;
    std::vector<std::string> inputs;  // producing node ids, sorted
};

struct CallGraph {
    std::vector<CallNode> nodes;  // ordered by (round_index, node_id)
    int rounds = 0;               // solution-generating rounds

    /// Solver + aggregator + final aggregator nodes (for MoA: N + R*M + 1).
    int solution_calls() const;
};

/// Lays out the call DAG for a pipeline; every aggregator round is fully
/// connected to the previous round, one final aggregator sits last.
CallGraph plan_call_graph(const PipelineConfig& cfg);

/// Deterministic output-format instructions generated from the problem's
/// sub-answer structure.
std::string format_instructions(const Problem& problem);

struct PipelineResult {
    SolutionAttempt attempt;
    CallGraph executed;
    bool no_reference = false;  // grammar pipeline found no reference material
    std::vector<std::string> warnings;
};

/// Counting semaphore bounding concurrent LLM calls; one instance is
/// shared across problem fan-out and within-round node fan-out.
class CallLimiter {
public:
    explicit CallLimiter(int limit);
    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

/// Executes one problem through the configured pipeline. Nodes within a
/// round run concurrently (bounded); outputs are ordered by node_id before
/// being passed forward. The final node's parsed structured output becomes
/// the SolutionAttempt; one repair re-prompt, then format_ok=false.
PipelineResult run_pipeline(const Problem& problem, const PipelineConfig& cfg, Gateway& gateway,
                            const KbIndex* kb, CallLimiter* limiter = nullptr);

struct ExperimentGradingSetup {
    GradingConfig grading;
    std::string judge_model;  // fuzzy JudgeLLM + rule checklist
    std::string embed_model;  // fuzzy EmbeddingThreshold
};

struct ProblemOutcome {
    int year = 0;
    int number = 0;
    std::string status;  // "graded" | "format_failed" | "error"
    SolutionAttempt attempt;
    std::optional<GradeReport> report;
    CallGraph graph;
    TypologyAnnotation annotation;  // snapshot, so records report standalone
    bool no_reference = false;
    std::string error;
    std::vector<std::string> warnings;
};

struct ExperimentRecord {
    nlohmann::json config_snapshot = nullptr;
    std::vector<ProblemOutcome> outcomes;  // (year, number) ascending
    int total_graded = 0;
    int ungraded = 0;  // format failures + pipeline errors, Table-7 "Total" shortfall
    std::optional<Rational> average;
    int buckets[4] = {0, 0, 0, 0};
};

/// Runs and grades a whole problem set; problems run concurrently, results
/// accumulate in (year, number) order regardless of completion order, and
/// per-problem failures never abort the experiment.
ExperimentRecord run_experiment(const std::vector<Problem>& problems, const PipelineConfig& cfg,
                                const ExperimentGradingSetup& setup, Gateway& gateway,
                                const KbIndex* kb);

nlohmann::json experiment_record_to_json(const ExperimentRecord& record);
ExperimentRecord experiment_record_from_json(const nlohmann::json& j);

/// One Table-7-style summary row: average, four bucket counts, total.
std::string experiment_summary_csv(const ExperimentRecord& record);

}  // namespace harness
