#include "harness/pipeline.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "harness/fsutil.hpp"
#include "harness/structured.hpp"

namespace harness {

using nlohmann::json;

std::string to_string(PipelineKind k) {
    switch (k) {
        case PipelineKind::Vanilla: return "vanilla";
        case PipelineKind::Guided: return "guided";
        case PipelineKind::GrammarRag: return "grammar_rag";
        case PipelineKind::SingleAgentRounds: return "single_agent_rounds";
        case PipelineKind::MoA: return "moa";
    }
    return "?";
}

PipelineKind pipeline_kind_from_string(const std::string& s) {
    if (s == "vanilla") return PipelineKind::Vanilla;
    if (s == "guided") return PipelineKind::Guided;
    if (s == "grammar_rag") return PipelineKind::GrammarRag;
    if (s == "single_agent_rounds") return PipelineKind::SingleAgentRounds;
    if (s == "moa") return PipelineKind::MoA;
    throw PlanError("unknown pipeline kind: " + s);
}

std::string to_string(AgentRole r) {
    switch (r) {
        case AgentRole::Solver: return "Solver";
        case AgentRole::Aggregator: return "Aggregator";
        case AgentRole::FinalAggregator: return "FinalAggregator";
        case AgentRole::GrammarAgent: return "GrammarAgent";
    }
    return "?";
}

void PipelineConfig::validate() {
    if (solver_models.empty()) throw PlanError("pipeline config: solver_models is empty");
    if (parallelism < 1) throw PlanError("pipeline config: parallelism must be >= 1");
    if (!(temperature >= 0.0)) throw PlanError("pipeline config: temperature must be >= 0");
    switch (kind) {
        case PipelineKind::Vanilla:
            rounds = 1;
            break;
        case PipelineKind::Guided:
            if (!guide_path) throw PlanError("guided pipeline requires guide_path");
            rounds = 1;
            break;
        case PipelineKind::GrammarRag:
            rounds = 1;
            break;
        case PipelineKind::SingleAgentRounds:
            if (n != 1 || m != 1) {
                throw PlanError("single-agent pipeline requires N = M = 1");
            }
            if (rounds < 1) throw PlanError("single-agent pipeline requires rounds >= 1");
            break;
        case PipelineKind::MoA: {
            if (n < 1 || m < 1 || r < 0) throw PlanError("MoA requires N >= 1, M >= 1, R >= 0");
            const int expected = r + 2;
            if (rounds == 0) rounds = expected;
            if (rounds != expected) {
                throw PlanError("MoA invariant violated: rounds must equal R + 2 (got rounds=" +
                                std::to_string(rounds) + ", R=" + std::to_string(r) + ")");
            }
            if (solver_models.size() == 1 && n > 1) {
                solver_models.assign(static_cast<std::size_t>(n), solver_models[0]);
            }
            if (solver_models.size() != static_cast<std::size_t>(n)) {
                throw PlanError("MoA requires one solver model per layer-1 agent (N=" +
                                std::to_string(n) + ", got " +
                                std::to_string(solver_models.size()) + ")");
            }
            if (aggregator_model.empty()) throw PlanError("MoA requires aggregator_model");
            break;
        }
    }
    if (kind == PipelineKind::SingleAgentRounds && rounds > 1 && aggregator_model.empty()) {
        aggregator_model = solver_models[0];
    }
}

int CallGraph::solution_calls() const {
    int count = 0;
    for (const auto& node : nodes) {
        if (node.role != AgentRole::GrammarAgent) ++count;
    }
    return count;
}

namespace {

std::string node_name(int round, AgentRole role, int index) {
    switch (role) {
        case AgentRole::Solver: return "r" + std::to_string(round) + ".s" + std::to_string(index);
        case AgentRole::Aggregator:
            return "r" + std::to_string(round) + ".a" + std::to_string(index);
        case AgentRole::FinalAggregator: return "r" + std::to_string(round) + ".final";
        case AgentRole::GrammarAgent: return "r0.grammar";
    }
    return "?";
}

}  // namespace

CallGraph plan_call_graph(const PipelineConfig& cfg_in) {
    PipelineConfig cfg = cfg_in;
    cfg.validate();

    CallGraph graph;
    graph.rounds = cfg.rounds;
    auto ids_of_round = [&graph](int round) {
        std::vector<std::string> ids;
        for (const auto& node : graph.nodes) {
            if (node.round_index == round && node.role != AgentRole::GrammarAgent) {
                ids.push_back(node.node_id);
            }
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    switch (cfg.kind) {
        case PipelineKind::Vanilla:
        case PipelineKind::Guided:
        case PipelineKind::GrammarRag: {
            CallNode solver{node_name(1, AgentRole::Solver, 1), 1, AgentRole::Solver,
                            cfg.solver_models[0], {}};
            if (cfg.kind == PipelineKind::GrammarRag) {
                CallNode grammar{node_name(0, AgentRole::GrammarAgent, 1), 0,
                                 AgentRole::GrammarAgent, cfg.solver_models[0], {}};
                solver.inputs.push_back(grammar.node_id);
                graph.nodes.push_back(std::move(grammar));
            }
            graph.nodes.push_back(std::move(solver));
            break;
        }
        case PipelineKind::SingleAgentRounds: {
            for (int round = 1; round <= cfg.rounds; ++round) {
                AgentRole role = AgentRole::Solver;
                if (round > 1) {
                    role = round == cfg.rounds ? AgentRole::FinalAggregator : AgentRole::Aggregator;
                }
                CallNode node{node_name(round, role, 1), round, role, cfg.solver_models[0], {}};
                if (round > 1) node.inputs = ids_of_round(round - 1);
                graph.nodes.push_back(std::move(node));
            }
            break;
        }
        case PipelineKind::MoA: {
            for (int i = 1; i <= cfg.n; ++i) {
                graph.nodes.push_back({node_name(1, AgentRole::Solver, i), 1, AgentRole::Solver,
                                       cfg.solver_models[static_cast<std::size_t>(i - 1)], {}});
            }
            for (int round = 2; round <= cfg.rounds - 1; ++round) {
                auto inputs = ids_of_round(round - 1);
                for (int i = 1; i <= cfg.m; ++i) {
                    graph.nodes.push_back({node_name(round, AgentRole::Aggregator, i), round,
                                           AgentRole::Aggregator, cfg.aggregator_model, inputs});
                }
            }
            graph.nodes.push_back({node_name(cfg.rounds, AgentRole::FinalAggregator, 1), cfg.rounds,
                                   AgentRole::FinalAggregator, cfg.aggregator_model,
                                   ids_of_round(cfg.rounds - 1)});
            break;
        }
    }

    std::sort(graph.nodes.begin(), graph.nodes.end(), [](const CallNode& a, const CallNode& b) {
        if (a.round_index != b.round_index) return a.round_index < b.round_index;
        return a.node_id < b.node_id;
    });
    return graph;
}

std::string format_instructions(const Problem& problem) {
    std::string out =
        "Respond with a single JSON object of the form "
        "{\"answers\": {<sub-problem id>: <answer>, ...}, \"explanation\": \"<the linguistic "
        "rules you inferred>\"}.\n";
    for (const auto& sub : problem.sub_problems) {
        if (sub.answer_specs.size() > 1) {
            out += "For sub-problem \"" + sub.id + "\", provide a JSON array of " +
                   std::to_string(sub.answer_specs.size()) + " answers in task order.\n";
            continue;
        }
        const AnswerSpec& spec = sub.answer_specs[0];
        if (spec.mode == AnswerMode::Select) {
            const std::string lo =
                spec.select_min == kUnbounded ? "any number" : std::to_string(spec.select_min);
            const std::string hi =
                spec.select_max == kUnbounded ? "unlimited" : std::to_string(spec.select_max);
            out += "For sub-problem \"" + sub.id + "\", provide a JSON array of strings (minimum " +
                   lo + ", maximum " + hi + ").\n";
        } else {
            out += "For sub-problem \"" + sub.id + "\", provide a single string.\n";
        }
    }
    out += "Output only the JSON object, with no surrounding text.";
    return out;
}

namespace {

constexpr const char* kSolverSystemPrompt =
    "You are an expert linguist solving a self-contained linguistics olympiad problem. Derive "
    "the rules strictly from the data given; the solution must account for every example. Answer "
    "precisely in the required format.";

constexpr const char* kAggregatorSystemPrompt =
    "You are the aggregator in a team solving a linguistics olympiad problem. You are given the "
    "candidate solutions proposed in the previous round. Weigh them against the problem data, "
    "resolve disagreements, and produce your own complete solution in the required format.";

struct LimiterGuard {
    explicit LimiterGuard(CallLimiter& l) : limiter(l) { limiter.acquire(); }
    ~LimiterGuard() { limiter.release(); }
    CallLimiter& limiter;
};

std::optional<SolutionAttempt> attempt_from_value(const json& value, const Problem& problem) {
    if (!value.is_object() || !value.contains("answers") || !value.at("answers").is_object()) {
        return std::nullopt;
    }
    SolutionAttempt attempt;
    attempt.year = problem.year;
    attempt.number = problem.number;
    auto as_text = [](const json& v) {
        return v.is_string() ? v.get<std::string>() : v.dump();
    };
    for (const auto& [key, v] : value.at("answers").items()) {
        std::vector<std::string> outputs;
        if (v.is_array()) {
            for (const auto& item : v) outputs.push_back(as_text(item));
        } else {
            outputs.push_back(as_text(v));
        }
        attempt.sub_answers[key] = std::move(outputs);
    }
    if (value.contains("explanation") && value.at("explanation").is_string()) {
        attempt.explanation = value.at("explanation").get<std::string>();
    }
    return attempt;
}

}  // namespace

CallLimiter::CallLimiter(int limit) : available_(limit) {}

void CallLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
}

void CallLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

PipelineResult run_pipeline(const Problem& problem, const PipelineConfig& cfg_in, Gateway& gateway,
                            const KbIndex* kb, CallLimiter* limiter) {
    PipelineConfig cfg = cfg_in;
    cfg.validate();
    CallLimiter own_limiter(cfg.parallelism);
    if (!limiter) limiter = &own_limiter;
    PipelineResult result;
    result.executed = plan_call_graph(cfg);

    std::string system_extra;  // guide and/or grammar brief, solver nodes only
    if (cfg.kind == PipelineKind::Guided) {
        system_extra = trim(read_file(*cfg.guide_path)) + "\n\n";
    }
    if (cfg.kind == PipelineKind::GrammarRag) {
        if (!kb) throw PlanError("grammar pipeline requires a knowledge-base index");
        auto hits = kb->search(grammar_query_for(problem, cfg.kb_top_k),
                               [&](const std::vector<std::string>& texts) {
                                   return gateway.embed_texts(texts, cfg.kb_embed_model);
                               });
        GrammarBrief brief = summarize_grammar(
            problem, hits,
            [&](const std::string& system, const std::string& user) {
                ChatRequest req;
                req.model_id = cfg.solver_models[0];
                req.system_prompt = system;
                req.messages.push_back({Role::user, user});
                req.temperature = cfg.temperature;
                req.max_tokens = cfg.kb_brief_max_tokens;
                return gateway.complete_chat(req).text;
            });
        result.no_reference = brief.no_reference;
        if (!brief.warning.empty()) result.warnings.push_back(brief.warning);
        if (brief.text) system_extra = "Reference grammar notes:\n" + *brief.text + "\n\n";
    }

    const std::string format_block = format_instructions(problem);
    const std::string solver_user = problem.statement + "\n\n" + format_block;

    std::map<std::string, std::string> outputs;  // node_id -> raw text
    std::uint64_t seed = 0;
    std::map<std::string, std::uint64_t> seeds;
    for (const auto& node : result.executed.nodes) seeds[node.node_id] = seed++;

    ChatRequest final_request;
    std::string final_text;

    for (int round = 1; round <= result.executed.rounds; ++round) {
        std::vector<const CallNode*> layer;
        for (const auto& node : result.executed.nodes) {
            if (node.round_index == round && node.role != AgentRole::GrammarAgent) {
                layer.push_back(&node);
            }
        }
        std::vector<ChatRequest> requests(layer.size());
        for (std::size_t i = 0; i < layer.size(); ++i) {
            const CallNode& node = *layer[i];
            ChatRequest req;
            req.model_id = node.model_id;
            req.temperature = cfg.temperature;
            req.run_seed = seeds[node.node_id];
            if (node.role == AgentRole::Solver) {
                req.system_prompt = system_extra + kSolverSystemPrompt;
                req.messages.push_back({Role::user, solver_user});
            } else {
                req.system_prompt = kAggregatorSystemPrompt;
                std::string user;
                int label = 1;
                for (const auto& input_id : node.inputs) {
                    user += "Solution " + std::to_string(label++) + ":\n" + outputs[input_id] +
                            "\n\n";
                }
                user += "Problem:\n" + problem.statement + "\n\n" + format_block;
                req.messages.push_back({Role::user, user});
            }
            requests[i] = std::move(req);
        }

        std::vector<std::string> texts(layer.size());
        std::vector<std::string> errors(layer.size());
        std::vector<std::thread> workers;
        workers.reserve(layer.size());
        for (std::size_t i = 0; i < layer.size(); ++i) {
            workers.emplace_back([&, i] {
                LimiterGuard guard(*limiter);
                try {
                    texts[i] = gateway.complete_chat(requests[i]).text;
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            });
        }
        for (auto& worker : workers) worker.join();
        for (std::size_t i = 0; i < layer.size(); ++i) {
            if (!errors[i].empty()) {
                throw TransportError("pipeline node " + layer[i]->node_id + " failed: " + errors[i],
                                     false);
            }
            outputs[layer[i]->node_id] = texts[i];
        }
        if (round == result.executed.rounds) {
            final_request = requests.back();
            final_text = texts.back();
        }
    }

    // Final-output parsing with one repair re-prompt.
    auto outcome = parse_structured_output(final_text, "answers object");
    std::optional<SolutionAttempt> attempt;
    if (outcome.ok) attempt = attempt_from_value(outcome.value, problem);
    if (!attempt) {
        ChatRequest repair = final_request;
        repair.messages.push_back({Role::assistant, final_text});
        repair.messages.push_back(
            {Role::user, "Your previous response could not be parsed. " + format_block});
        std::string repaired;
        {
            LimiterGuard guard(*limiter);
            repaired = gateway.complete_chat(repair).text;
        }
        auto second = parse_structured_output(repaired, "answers object");
        if (second.ok) attempt = attempt_from_value(second.value, problem);
        if (attempt) final_text = repaired;
    }

    if (attempt) {
        result.attempt = std::move(*attempt);
        result.attempt.format_ok = true;
    } else {
        result.attempt.year = problem.year;
        result.attempt.number = problem.number;
        result.attempt.format_ok = false;
    }
    result.attempt.raw_output = final_text;
    return result;
}

namespace {

json call_graph_to_json(const CallGraph& graph) {
    json nodes = json::array();
    for (const auto& node : graph.nodes) {
        nodes.push_back({{"node_id", node.node_id},
                         {"round", node.round_index},
                         {"role", to_string(node.role)},
                         {"model_id", node.model_id},
                         {"inputs", node.inputs}});
    }
    return json{{"rounds", graph.rounds}, {"nodes", nodes}};
}

json attempt_to_json(const SolutionAttempt& attempt) {
    return json{{"year", attempt.year},
                {"number", attempt.number},
                {"sub_answers", attempt.sub_answers},
                {"explanation", attempt.explanation},
                {"raw_output", attempt.raw_output},
                {"format_ok", attempt.format_ok}};
}

SolutionAttempt attempt_from_record_json(const json& j) {
    SolutionAttempt attempt;
    attempt.year = j.at("year").get<int>();
    attempt.number = j.at("number").get<int>();
    attempt.sub_answers =
        j.at("sub_answers").get<std::map<std::string, std::vector<std::string>>>();
    attempt.explanation = j.at("explanation").get<std::string>();
    attempt.raw_output = j.at("raw_output").get<std::string>();
    attempt.format_ok = j.at("format_ok").get<bool>();
    return attempt;
}

}  // namespace

ExperimentRecord run_experiment(const std::vector<Problem>& problems, const PipelineConfig& cfg_in,
                                const ExperimentGradingSetup& setup, Gateway& gateway,
                                const KbIndex* kb) {
    if (problems.empty()) throw std::invalid_argument("run_experiment: no problems");
    PipelineConfig cfg = cfg_in;
    cfg.validate();
    setup.grading.validate();

    std::vector<std::size_t> order(problems.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(problems[a].year, problems[a].number) <
               std::pair(problems[b].year, problems[b].number);
    });

    JudgeFn judge = [&](const std::string& prompt) {
        ChatRequest req;
        req.model_id = setup.judge_model;
        req.messages.push_back({Role::user, prompt});
        req.temperature = 0.0;
        return gateway.complete_chat(req).text;
    };
    EmbedFn embed = [&](const std::string& text) {
        return gateway.embed_texts({text}, setup.embed_model).at(0);
    };
    const bool needs_judge = !setup.judge_model.empty();
    const bool needs_embed = !setup.embed_model.empty();

    std::vector<ProblemOutcome> outcomes(problems.size());
    CallLimiter limiter(cfg.parallelism);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= order.size()) return;
            const Problem& problem = problems[order[slot]];
            ProblemOutcome outcome;
            outcome.year = problem.year;
            outcome.number = problem.number;
            outcome.annotation = problem.annotation;
            try {
                PipelineResult run = run_pipeline(problem, cfg, gateway, kb, &limiter);
                outcome.attempt = std::move(run.attempt);
                outcome.graph = std::move(run.executed);
                outcome.no_reference = run.no_reference;
                outcome.warnings = std::move(run.warnings);
                if (outcome.attempt.format_ok) {
                    outcome.report = grade_attempt(outcome.attempt, problem, setup.grading,
                                                   needs_judge ? &judge : nullptr,
                                                   needs_embed ? &embed : nullptr);
                    outcome.status = "graded";
                } else {
                    outcome.status = "format_failed";
                }
            } catch (const std::exception& e) {
                outcome.status = "error";
                outcome.error = e.what();
            }
            outcomes[slot] = std::move(outcome);
        }
    };
    const int workers_n = std::max(1, std::min<int>(cfg.parallelism,
                                                    static_cast<int>(problems.size())));
    std::vector<std::thread> workers;
    for (int i = 0; i < workers_n; ++i) workers.emplace_back(worker);
    for (auto& w : workers) w.join();

    ExperimentRecord record;
    record.outcomes = std::move(outcomes);
    Rational sum(0, 1);
    for (const auto& outcome : record.outcomes) {
        if (outcome.report) {
            ++record.total_graded;
            sum = sum + outcome.report->final_score;
            record.buckets[static_cast<int>(outcome.report->bucket)]++;
        } else {
            ++record.ungraded;
        }
    }
    if (record.total_graded > 0) {
        record.average = sum / Rational::from_int(record.total_graded);
    }
    return record;
}

json experiment_record_to_json(const ExperimentRecord& record) {
    json problems = json::array();
    for (const auto& outcome : record.outcomes) {
        json subjects = json::array();
        for (Subject s : outcome.annotation.subjects) subjects.push_back(to_string(s));
        json entry{{"year", outcome.year},
                   {"number", outcome.number},
                   {"status", outcome.status},
                   {"attempt", attempt_to_json(outcome.attempt)},
                   {"call_graph", call_graph_to_json(outcome.graph)},
                   {"annotation",
                    {{"subjects", subjects},
                     {"type", to_string(outcome.annotation.type)},
                     {"language", outcome.annotation.language},
                     {"family", outcome.annotation.language_family},
                     {"glottocode", outcome.annotation.glottocode}}},
                   {"no_reference", outcome.no_reference},
                   {"error", outcome.error},
                   {"warnings", outcome.warnings}};
        entry["report"] = outcome.report ? grade_report_to_json(*outcome.report) : json(nullptr);
        problems.push_back(std::move(entry));
    }
    json summary{{"total_graded", record.total_graded}, {"ungraded", record.ungraded}};
    summary["buckets"] = json::array(
        {record.buckets[0], record.buckets[1], record.buckets[2], record.buckets[3]});
    summary["average"] = record.average
                             ? json{{"num", record.average->num()},
                                    {"den", record.average->den()},
                                    {"decimal", record.average->to_decimal_string(6)}}
                             : json(nullptr);
    return json{{"config", record.config_snapshot}, {"problems", problems}, {"summary", summary}};
}

ExperimentRecord experiment_record_from_json(const json& j) {
    ExperimentRecord record;
    record.config_snapshot = j.value("config", json(nullptr));
    for (const auto& entry : j.at("problems")) {
        ProblemOutcome outcome;
        outcome.year = entry.at("year").get<int>();
        outcome.number = entry.at("number").get<int>();
        outcome.status = entry.at("status").get<std::string>();
        outcome.attempt = attempt_from_record_json(entry.at("attempt"));
        if (entry.contains("annotation")) {
            const auto& an = entry.at("annotation");
            for (const auto& s : an.at("subjects")) {
                outcome.annotation.subjects.insert(subject_from_string(s.get<std::string>()));
            }
            outcome.annotation.type = problem_type_from_string(an.at("type").get<std::string>());
            outcome.annotation.language = an.value("language", std::string());
            outcome.annotation.language_family = an.value("family", std::string());
            outcome.annotation.glottocode = an.value("glottocode", std::string());
        }
        outcome.no_reference = entry.value("no_reference", false);
        outcome.error = entry.value("error", std::string());
        if (entry.contains("warnings")) {
            outcome.warnings = entry.at("warnings").get<std::vector<std::string>>();
        }
        if (entry.contains("report") && !entry.at("report").is_null()) {
            outcome.report = grade_report_from_json(entry.at("report"));
        }
        const auto& gj = entry.at("call_graph");
        outcome.graph.rounds = gj.at("rounds").get<int>();
        for (const auto& nj : gj.at("nodes")) {
            CallNode node;
            node.node_id = nj.at("node_id").get<std::string>();
            node.round_index = nj.at("round").get<int>();
            const std::string role = nj.at("role").get<std::string>();
            if (role == "Solver") node.role = AgentRole::Solver;
            else if (role == "Aggregator") node.role = AgentRole::Aggregator;
            else if (role == "FinalAggregator") node.role = AgentRole::FinalAggregator;
            else node.role = AgentRole::GrammarAgent;
            node.model_id = nj.at("model_id").get<std::string>();
            node.inputs = nj.at("inputs").get<std::vector<std::string>>();
            outcome.graph.nodes.push_back(std::move(node));
        }
        record.outcomes.push_back(std::move(outcome));
    }
    const auto& summary = j.at("summary");
    record.total_graded = summary.at("total_graded").get<int>();
    record.ungraded = summary.at("ungraded").get<int>();
    for (int i = 0; i < 4; ++i) record.buckets[i] = summary.at("buckets")[i].get<int>();
    if (!summary.at("average").is_null()) {
        record.average = Rational(summary.at("average").at("num").get<std::int64_t>(),
                                  summary.at("average").at("den").get<std::int64_t>());
    }
    return record;
}

std::string experiment_summary_csv(const ExperimentRecord& record) {
    std::string out = "avg_score,b1,b2,b3,b4,total\n";
    out += record.average ? record.average->to_decimal_string(6) : "---";
    for (int i = 0; i < 4; ++i) out += "," + std::to_string(record.buckets[i]);
    out += "," + std::to_string(record.total_graded) + "\n";
    return out;
}

}  // namespace harness
