#include "harness/cli.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "harness/chrf.hpp"
#include "harness/cotjudge.hpp"
#include "harness/csv.hpp"
#include "harness/fsutil.hpp"
#include "harness/report.hpp"
#include "harness/sha256.hpp"
#include "harness/stats.hpp"
#include "harness/stub_transport.hpp"

namespace harness {

using nlohmann::json;

Gateway make_gateway(const RunConfig& cfg) {
    auto stub = std::make_shared<StubTransport>();
    auto http = std::make_shared<HttpTransport>(cfg.providers);
    auto router = std::make_shared<RoutingTransport>(stub, http);
    RetryPolicy policy;
    policy.max_attempts = cfg.max_attempts;
    policy.backoff_ms = cfg.backoff_ms;
    return Gateway(cfg.cache_dir, router, policy);
}

json config_snapshot(const RunConfig& cfg) {
    json pipeline{{"kind", to_string(cfg.pipeline.kind)},
                  {"solver_models", cfg.pipeline.solver_models},
                  {"aggregator_model", cfg.pipeline.aggregator_model},
                  {"N", cfg.pipeline.n},
                  {"M", cfg.pipeline.m},
                  {"R", cfg.pipeline.r},
                  {"rounds", cfg.pipeline.rounds},
                  {"temperature", cfg.pipeline.temperature}};
    const char* backend = cfg.grading.grading.fuzzy_backend == FuzzyBackend::JudgeLLM
                              ? "judge_llm"
                              : cfg.grading.grading.fuzzy_backend == FuzzyBackend::AlwaysZero
                                    ? "always_zero"
                                    : "embedding_threshold";
    json grading{{"w_answer", cfg.grading.grading.w_answer.to_fraction_string()},
                 {"w_explanation", cfg.grading.grading.w_explanation.to_fraction_string()},
                 {"fuzzy_backend", backend},
                 {"judge_model", cfg.grading.judge_model}};
    return json{{"pipeline", pipeline}, {"grading", grading}};
}

void write_experiment_outputs(const ExperimentRecord& record,
                              const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    atomic_write_file(out_dir / "experiment.json",
                      experiment_record_to_json(record).dump(2) + "\n");
    atomic_write_file(out_dir / "summary.csv", experiment_summary_csv(record));
    for (const auto& outcome : record.outcomes) {
        if (!outcome.report) continue;
        const std::string name = std::to_string(outcome.year) + "-" +
                                 std::to_string(outcome.number) + ".json";
        atomic_write_file(out_dir / "reports" / name,
                          grade_report_to_json(*outcome.report).dump(2) + "\n");
    }
}

namespace {

std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

int guard(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const LoadError& e) {
        std::cerr << "load error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PlanError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

int cmd_run(const RunConfig& cfg_in) {
    return guard([&]() -> int {
        RunConfig cfg = cfg_in;
        cfg.pipeline.validate();
        if (cfg.problems_path.empty()) {
            throw ConfigError("run config is missing [problems] path");
        }
        auto problems = parse_problem_set(cfg.problems_path);
        Gateway gateway = make_gateway(cfg);

        std::optional<KbIndex> kb;
        if (cfg.pipeline.kind == PipelineKind::GrammarRag) {
            if (!cfg.kb_index) throw ConfigError("grammar_rag pipeline requires [kb] index");
            kb = KbIndex::load(*cfg.kb_index);
        }

        const std::int64_t started = unix_now();
        ExperimentRecord record =
            run_experiment(problems, cfg.pipeline, cfg.grading, gateway, kb ? &*kb : nullptr);
        record.config_snapshot = config_snapshot(cfg);
        write_experiment_outputs(record, cfg.output_dir);

        const std::string run_id =
            cfg.run_id.empty() ? sha256_hex(record.config_snapshot.dump()).substr(0, 12)
                               : cfg.run_id;
        const auto stats = gateway.stats();
        json manifest{{"run_id", run_id},
                      {"started_unix", started},
                      {"finished_unix", unix_now()},
                      {"outputs", {"experiment.json", "summary.csv", "reports/"}},
                      {"cache",
                       {{"hits", stats.cache_hits},
                        {"misses", stats.cache_misses},
                        {"network_calls", stats.network_calls}}}};
        atomic_write_file(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");

        std::cout << experiment_summary_csv(record);
        int errors = 0;
        for (const auto& outcome : record.outcomes) {
            if (outcome.status == "error") {
                ++errors;
                std::cerr << "problem " << outcome.year << "-" << outcome.number
                          << " failed: " << outcome.error << "\n";
            }
        }
        return errors > 0 ? kExitRuntime : kExitOk;
    });
}

std::string probe_prompt_e2t(const std::string& target_lang, const std::string& script,
                             const std::string& sentence) {
    return "Translate the following sentence from English to " + target_lang + " using the " +
           script + " script:\nInput: " + sentence;
}

std::string probe_prompt_t2e(const std::string& target_lang, const std::string& sentence) {
    return "Translate the following sentence " + target_lang + " to English:\nInput: " + sentence;
}

std::string reasoning_generation_prompt(const std::string& problem_text,
                                        const std::string& solution_text) {
    return "## Prompt:\nAs an expert in linguistics solve the following problem. Given the "
           "following IOL problem and its answer, generate a detailed, step-by-step chain of "
           "thoughts that could specifically and reasonably lead to the answer. Focus on the "
           "reasoning process, essential linguistic rules, logical deductions, and the final "
           "solution. Make your whole output into a markdown file.\n\n## Problem:\n" +
           problem_text + "\n\n## Solution:\n" + solution_text + "\n\n## Your response:\n";
}

namespace {

struct ProbeSentence {
    std::string id;
    std::string english;
    std::string target;
};

struct ProbeLanguage {
    std::string name;
    std::string iso;
    std::string script;
    std::string family;
    std::string glottocode;  // "---" when unmapped
    std::optional<int> resource_class;
    std::vector<ProbeSentence> sentences;
};

std::vector<ProbeLanguage> load_probe_languages(const ProbeConfig& probe) {
    if (probe.corpus.empty()) throw ConfigError("probe config is missing corpus");
    auto rows = parse_csv(read_file(probe.corpus));
    if (rows.empty() ||
        rows[0] != std::vector<std::string>{"lang_name", "iso639_3", "script", "sentence_id",
                                            "english", "target"}) {
        throw LoadError(probe.corpus.string() +
                        ": expected header lang_name,iso639_3,script,sentence_id,english,target");
    }

    std::map<std::string, std::string> families;
    if (!probe.languages.empty()) {
        auto lang_rows = parse_csv(read_file(probe.languages));
        if (lang_rows.empty() ||
            lang_rows[0] != std::vector<std::string>{"lang_name", "iso639_3", "family"}) {
            throw LoadError(probe.languages.string() +
                            ": expected header lang_name,iso639_3,family");
        }
        for (std::size_t i = 1; i < lang_rows.size(); ++i) {
            if (lang_rows[i].size() >= 3) families[lang_rows[i][0]] = lang_rows[i][2];
        }
    }
    GlottologMapping mapping;
    if (!probe.mapping.empty()) mapping = GlottologMapping::load_csv(probe.mapping);

    std::vector<ProbeLanguage> languages;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() < 6) {
            throw LoadError(probe.corpus.string() + ": row " + std::to_string(i + 1) +
                            ": expected 6 fields");
        }
        auto it = index.find(row[0]);
        if (it == index.end()) {
            ProbeLanguage lang;
            lang.name = row[0];
            lang.iso = row[1];
            lang.script = row[2];
            auto fam = families.find(lang.name);
            lang.family = fam == families.end() ? "" : fam->second;
            auto entry = mapping.by_iso.find(lang.iso);
            lang.glottocode = entry == mapping.by_iso.end() ? "---" : entry->second.glottocode;
            lang.resource_class = resolve_resource_class(lang.iso, mapping);
            it = index.emplace(lang.name, languages.size()).first;
            languages.push_back(std::move(lang));
        }
        auto& lang = languages[it->second];
        if (static_cast<int>(lang.sentences.size()) < probe.sentences_per_language) {
            lang.sentences.push_back({row[3], row[4], row[5]});
        }
    }
    if (languages.empty()) throw LoadError(probe.corpus.string() + ": no sentences");
    std::sort(languages.begin(), languages.end(),
              [](const ProbeLanguage& a, const ProbeLanguage& b) { return a.name < b.name; });
    return languages;
}

struct DirectionStats {
    std::vector<std::pair<std::string, std::string>> pairs;  // (hypothesis, reference)
    std::map<std::string, CorpusChrf> per_language;
};

}  // namespace

ProbeOutputs run_probe(const ProbeConfig& probe, Gateway& gateway) {
    if (probe.model.empty()) throw ConfigError("probe config is missing model");
    if (probe.direction != "e2t" && probe.direction != "t2e" && probe.direction != "both") {
        throw ConfigError("probe direction must be e2t, t2e or both");
    }
    auto languages = load_probe_languages(probe);

    std::vector<std::string> directions;
    if (probe.direction == "e2t" || probe.direction == "both") directions.push_back("E2T");
    if (probe.direction == "t2e" || probe.direction == "both") directions.push_back("T2E");

    const ChrfParams chrf_params;
    std::map<std::string, DirectionStats> stats;

    for (const auto& direction : directions) {
        auto& dir_stats = stats[direction];
        for (const auto& lang : languages) {
            std::vector<std::pair<std::string, std::string>> pairs;
            for (const auto& sentence : lang.sentences) {
                ChatRequest req;
                req.model_id = probe.model;
                req.temperature = probe.temperature;
                req.thinking_budget = probe.thinking_budget;
                const bool e2t = direction == "E2T";
                req.messages.push_back(
                    {Role::user, e2t ? probe_prompt_e2t(lang.name, lang.script, sentence.english)
                                     : probe_prompt_t2e(lang.name, sentence.target)});
                const ChatResponse resp = gateway.complete_chat(req);
                pairs.emplace_back(resp.text, e2t ? sentence.target : sentence.english);
            }
            dir_stats.per_language[lang.name] = corpus_chrf(pairs, chrf_params, true);
            for (auto& p : pairs) dir_stats.pairs.push_back(std::move(p));
        }
    }

    ProbeOutputs out;
    out.scores_csv = "language,glottocode,script,class,direction,mean_chrf,n_missing\n";
    out.missing_csv = "language,glottocode,direction,n_missing\n";
    out.summary_csv = "direction,mean_chrf,n_scored,n_missing,spearman_rho,note\n";
    out.anova_csv = "factor,direction,eta_p_squared,p_value\n";

    for (const auto& direction : directions) {
        const auto& dir_stats = stats.at(direction);
        for (const auto& lang : languages) {
            const auto& c = dir_stats.per_language.at(lang.name);
            out.scores_csv += csv_row(
                {lang.name, lang.glottocode, lang.script,
                 lang.resource_class ? std::to_string(*lang.resource_class) : "---", direction,
                 c.n_scored > 0 ? format_fixed(c.mean_score) : "---",
                 std::to_string(c.n_missing)});
            if (c.n_missing > 0) {
                out.missing_csv += csv_row(
                    {lang.name, lang.glottocode, direction, std::to_string(c.n_missing)});
            }
        }

        const CorpusChrf overall = corpus_chrf(dir_stats.pairs, chrf_params, true);
        std::vector<double> classes;
        std::vector<double> means;
        for (const auto& lang : languages) {
            const auto& c = dir_stats.per_language.at(lang.name);
            if (lang.resource_class && c.n_scored > 0) {
                classes.push_back(double(*lang.resource_class));
                means.push_back(c.mean_score);
            }
        }
        std::string rho = "---";
        std::string note;
        if (classes.size() < 3) {
            note = "insufficient data";
        } else {
            try {
                rho = format_fixed(spearman_rho(means, classes));
            } catch (const std::invalid_argument&) {
                note = "constant input";
            }
        }
        out.summary_csv += csv_row({direction,
                                    overall.n_scored > 0 ? format_fixed(overall.mean_score) : "---",
                                    std::to_string(overall.n_scored),
                                    std::to_string(overall.n_missing), rho, note});

        const std::vector<std::pair<std::string, std::function<std::string(const ProbeLanguage&)>>>
            factors = {{"family", [](const ProbeLanguage& l) { return l.family; }},
                       {"class",
                        [](const ProbeLanguage& l) {
                            return l.resource_class ? std::to_string(*l.resource_class)
                                                    : std::string();
                        }},
                       {"script", [](const ProbeLanguage& l) { return l.script; }}};
        for (const auto& [factor, group_of] : factors) {
            GroupedSample sample;
            for (const auto& lang : languages) {
                const std::string label = group_of(lang);
                const auto& c = dir_stats.per_language.at(lang.name);
                if (label.empty() || c.n_scored == 0) continue;
                sample.groups[label].push_back(c.mean_score);
            }
            std::size_t n = 0;
            for (const auto& [label, values] : sample.groups) n += values.size();
            if (sample.groups.size() < 2 || n <= sample.groups.size()) continue;
            const AnovaResult result = anova_one_way(sample);
            out.anova_csv += csv_row({factor, direction, format_fixed(result.eta_p_squared),
                                      format_fixed(result.p_value)});
        }
    }
    return out;
}

int cmd_probe(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    return guard([&]() -> int {
        Gateway gateway = make_gateway(cfg);
        const ProbeOutputs outputs = run_probe(cfg.probe, gateway);
        std::filesystem::create_directories(out_dir);
        atomic_write_file(out_dir / "probe_scores.csv", outputs.scores_csv);
        atomic_write_file(out_dir / "probe_missing.csv", outputs.missing_csv);
        atomic_write_file(out_dir / "probe_summary.csv", outputs.summary_csv);
        atomic_write_file(out_dir / "probe_anova.csv", outputs.anova_csv);
        std::cout << outputs.summary_csv;
        return kExitOk;
    });
}

int cmd_judge(const RunConfig& cfg, const std::filesystem::path& record_path,
              const std::filesystem::path& problems_path, const std::filesystem::path& out_dir) {
    return guard([&]() -> int {
        if (cfg.judge.model.empty()) throw ConfigError("judge config is missing model");
        const std::string rubric = read_file(cfg.judge.rubric);
        json record_json = json::parse(read_file(record_path), nullptr, false);
        if (record_json.is_discarded()) {
            throw LoadError(record_path.string() + ": invalid experiment record JSON");
        }
        const ExperimentRecord record = experiment_record_from_json(record_json);
        auto problems = parse_problem_set(problems_path);
        std::map<std::pair<int, int>, const Problem*> by_ref;
        for (const auto& p : problems) by_ref[{p.year, p.number}] = &p;

        Gateway gateway = make_gateway(cfg);
        std::string jsonl;
        std::vector<JudgeScorecard> cards;
        int warnings = 0;
        for (const auto& outcome : record.outcomes) {
            if (outcome.status != "graded") continue;
            auto it = by_ref.find({outcome.year, outcome.number});
            if (it == by_ref.end() || trim(it->second->gold_reasoning).empty()) {
                std::cerr << "warning: problem " << outcome.year << "-" << outcome.number
                          << " has no gold reasoning; skipped\n";
                ++warnings;
                continue;
            }
            if (trim(outcome.attempt.raw_output).empty()) {
                std::cerr << "warning: problem " << outcome.year << "-" << outcome.number
                          << " has no reasoning trace; skipped\n";
                ++warnings;
                continue;
            }
            const std::string prompt = build_judge_prompt(rubric, it->second->gold_reasoning,
                                                          outcome.attempt.raw_output);
            JudgeScorecard card;
            bool parsed = false;
            for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
                ChatRequest req;
                req.model_id = cfg.judge.model;
                req.temperature = 0.0;
                std::string user = prompt;
                if (attempt == 1) {
                    user += "\n\nReminder: respond with only the JSON scorecard object.";
                }
                req.messages.push_back({Role::user, user});
                const std::string reply = gateway.complete_chat(req).text;
                try {
                    card = parse_judge_scores(reply);
                    parsed = true;
                } catch (const ScorecardError& e) {
                    if (attempt == 1) {
                        std::cerr << "warning: problem " << outcome.year << "-" << outcome.number
                                  << ": " << e.what() << "; skipped\n";
                        ++warnings;
                    }
                }
            }
            if (!parsed) continue;
            card.judge_model = cfg.judge.model;
            card.year = outcome.year;
            card.number = outcome.number;
            jsonl += scorecard_to_json(card).dump() + "\n";
            cards.push_back(std::move(card));
        }

        std::filesystem::create_directories(out_dir);
        atomic_write_file(out_dir / "scorecards.jsonl", jsonl);
        json summary{{"n_scored", cards.size()}, {"warnings", warnings}};
        if (!cards.empty()) {
            const ScorecardAggregate agg = aggregate_scorecards(cards);
            json metric_means = json::object();
            for (const auto& [code, mean] : agg.metric_means) {
                metric_means[to_string(code)] = mean;
            }
            json dimension_means = json::object();
            for (const auto& [dim, mean] : agg.dimension_means) {
                dimension_means[to_string(dim)] = mean;
            }
            summary["metric_means"] = metric_means;
            summary["dimension_means"] = dimension_means;
            summary["overall_mean"] = agg.overall_mean;
        }
        atomic_write_file(out_dir / "judge_summary.json", summary.dump(2) + "\n");
        return kExitOk;
    });
}

int cmd_gen_reasoning(const RunConfig& cfg, const std::filesystem::path& problems_path,
                      const std::string& model, const std::filesystem::path& out_dir) {
    return guard([&]() -> int {
        if (model.empty()) throw ConfigError("gen-reasoning requires a model");
        auto problems = parse_problem_set(problems_path);
        Gateway gateway = make_gateway(cfg);
        std::filesystem::create_directories(out_dir);
        for (const auto& problem : problems) {
            if (!problem.official_solution || trim(*problem.official_solution).empty()) {
                std::cerr << "warning: problem " << problem.ref()
                          << " has no official solution; skipped\n";
                continue;
            }
            ChatRequest req;
            req.model_id = model;
            req.temperature = 0.0;
            req.messages.push_back(
                {Role::user,
                 reasoning_generation_prompt(problem.statement, *problem.official_solution)});
            try {
                const ChatResponse resp = gateway.complete_chat(req);
                atomic_write_file(out_dir / (problem.ref() + ".md"), resp.text + "\n");
            } catch (const std::exception& e) {
                std::cerr << "warning: problem " << problem.ref() << ": " << e.what() << "\n";
            }
        }
        return kExitOk;
    });
}

int cmd_report(const std::vector<std::filesystem::path>& record_paths,
               const std::filesystem::path& out_dir) {
    return guard([&]() -> int {
        if (record_paths.empty()) throw ConfigError("report requires at least one record");
        std::vector<std::pair<GradeReport, TypologyAnnotation>> rows;
        for (const auto& path : record_paths) {
            json j = json::parse(read_file(path), nullptr, false);
            if (j.is_discarded()) throw LoadError(path.string() + ": invalid record JSON");
            const ExperimentRecord record = experiment_record_from_json(j);
            for (const auto& outcome : record.outcomes) {
                if (outcome.report) rows.emplace_back(*outcome.report, outcome.annotation);
            }
        }
        std::filesystem::create_directories(out_dir);
        const std::vector<std::pair<DistributionKey, std::string>> keys = {
            {DistributionKey::Family, "family"},
            {DistributionKey::Subject, "subject"},
            {DistributionKey::Type, "type"}};
        if (rows.empty()) {
            std::cerr << "warning: no graded problems in the given records\n";
            for (const auto& [key, name] : keys) {
                atomic_write_file(out_dir / ("dist_" + name + ".csv"),
                                  "key,n,mean,median,std,b1,b2,b3,b4\n");
                atomic_write_file(out_dir / ("dist_" + name + ".txt"), "");
            }
            return kExitOk;
        }
        for (const auto& [key, name] : keys) {
            const auto summaries = score_distribution(rows, key);
            atomic_write_file(out_dir / ("dist_" + name + ".csv"), distribution_csv(summaries));
            atomic_write_file(out_dir / ("dist_" + name + ".txt"),
                              distribution_text_table(summaries, name));
        }
        return kExitOk;
    });
}

int cmd_kb_ingest(const RunConfig& cfg, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& index_dir, const std::string& embed_model) {
    return guard([&]() -> int {
        Gateway gateway = make_gateway(cfg);
        KbIndex index;
        if (std::filesystem::exists(index_dir / "manifest.json")) {
            index = KbIndex::load(index_dir);
        }
        const std::string manifest = read_file(manifest_path);
        const auto base = manifest_path.has_parent_path() ? manifest_path.parent_path()
                                                          : std::filesystem::path(".");
        EmbedBatchFn embed = [&](const std::vector<std::string>& texts) {
            return gateway.embed_texts(texts, embed_model);
        };
        const TokenCounter tokens = whitespace_token_counter();

        std::size_t pos = 0;
        int line_no = 0;
        int ingested = 0;
        while (pos < manifest.size()) {
            std::size_t eol = manifest.find('\n', pos);
            if (eol == std::string::npos) eol = manifest.size();
            const std::string line = manifest.substr(pos, eol - pos);
            pos = eol + 1;
            ++line_no;
            if (trim(line).empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                throw LoadError(manifest_path.string() + ":" + std::to_string(line_no) +
                                ": invalid JSON line");
            }
            KbDocument doc;
            doc.doc_id = j.at("doc_id").get<std::string>();
            doc.title = j.value("title", std::string());
            doc.glottocode = j.at("glottocode").get<std::string>();
            doc.family = j.value("family", std::string());
            doc.languoid_name = j.value("languoid_name", std::string());
            if (j.contains("macroareas")) {
                doc.macroareas = j.at("macroareas").get<std::set<std::string>>();
            }
            if (j.contains("countries")) {
                doc.countries = j.at("countries").get<std::set<std::string>>();
            }
            doc.body_markdown = read_file(base / j.at("path").get<std::string>());
            const auto ids = index.ingest_document(doc, tokens, embed);
            std::cout << doc.doc_id << ": " << ids.size() << " chunks\n";
            ++ingested;
        }
        index.save(index_dir);
        std::cout << "ingested " << ingested << " document(s), " << index.chunk_count()
                  << " chunks total\n";
        return kExitOk;
    });
}

int cmd_kb_search(const RunConfig& cfg, const std::filesystem::path& index_dir,
                  const SearchQuery& query, const std::string& embed_model) {
    return guard([&]() -> int {
        Gateway gateway = make_gateway(cfg);
        const KbIndex index = KbIndex::load(index_dir);
        EmbedBatchFn embed = [&](const std::vector<std::string>& texts) {
            return gateway.embed_texts(texts, embed_model);
        };
        const auto hits = index.search(query, embed);
        int rank = 1;
        for (const auto& hit : hits) {
            std::string snippet = hit.chunk->text.substr(0, 160);
            for (auto& c : snippet) {
                if (c == '\n' || c == '\r' || c == '\t') c = ' ';
            }
            std::cout << rank++ << "\t" << format_fixed(hit.score) << "\t" << hit.chunk->chunk_id
                      << "\t" << hit.chunk->metadata.glottocode << "\t"
                      << hit.chunk->context_header << "\t" << snippet << "\n";
        }
        return kExitOk;
    });
}

}  // namespace harness
