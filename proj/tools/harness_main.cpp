#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "harness/cli.hpp"

namespace {

// Global flag overrides applied after the config file loads.
struct Globals {
    std::string config_path;
    std::string cache_dir;
    std::string out_dir;
    int parallelism = 0;
};

harness::RunConfig load_config(const Globals& globals) {
    harness::RunConfig cfg;
    if (!globals.config_path.empty()) {
        cfg = harness::RunConfig::load(globals.config_path);
    }
    if (!globals.cache_dir.empty()) cfg.cache_dir = globals.cache_dir;
    if (!globals.out_dir.empty()) cfg.output_dir = globals.out_dir;
    if (globals.parallelism > 0) cfg.pipeline.parallelism = globals.parallelism;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linguistics-olympiad LLM harness: run pipelines, grade solutions, probe "
                 "translation quality, judge reasoning, query the grammar knowledge base."};
    app.require_subcommand(1);

    Globals globals;
    app.add_option("--config", globals.config_path, "Run config (TOML)");
    app.add_option("--cache-dir", globals.cache_dir, "Response cache directory override");
    app.add_option("--out", globals.out_dir, "Output directory override");
    app.add_option("--parallelism", globals.parallelism, "Global LLM-call parallelism override");

    auto* run = app.add_subcommand("run", "Run a solving experiment and grade it");

    auto* probe = app.add_subcommand("probe", "Run the bidirectional translation probe");
    std::string probe_corpus, probe_languages, probe_mapping, probe_direction, probe_model;
    int probe_k = 0;
    probe->add_option("--corpus", probe_corpus, "Probe corpus CSV");
    probe->add_option("--languages", probe_languages, "Language metadata CSV");
    probe->add_option("--mapping", probe_mapping, "ISO-to-Glottocode mapping CSV");
    probe->add_option("--direction", probe_direction, "e2t | t2e | both");
    probe->add_option("--model", probe_model, "Model id, e.g. main:gemini-2.5-flash");
    probe->add_option("--k", probe_k, "Sentences per language");

    auto* judge = app.add_subcommand("judge", "Judge reasoning traces of an experiment record");
    std::string judge_record, judge_problems, judge_model, judge_rubric;
    judge->add_option("--record", judge_record, "experiment.json path")->required();
    judge->add_option("--problems", judge_problems, "Benchmark problem set path")->required();
    judge->add_option("--model", judge_model, "Judge model id");
    judge->add_option("--rubric", judge_rubric, "Rubric file override");

    auto* gen = app.add_subcommand("gen-reasoning", "Draft gold reasoning from official solutions");
    std::string gen_problems, gen_model;
    gen->add_option("--problems", gen_problems, "Benchmark problem set path")->required();
    gen->add_option("--model", gen_model, "Model id")->required();

    auto* report = app.add_subcommand("report", "Emit score-distribution tables from records");
    std::vector<std::string> report_records;
    report->add_option("records", report_records, "experiment.json paths")->required();

    auto* kb = app.add_subcommand("kb", "Grammar knowledge base");
    kb->require_subcommand(1);
    auto* kb_ingest = kb->add_subcommand("ingest", "Ingest documents from a JSONL manifest");
    std::string ingest_manifest, ingest_index, ingest_embed = "stub:hash64";
    kb_ingest->add_option("--manifest", ingest_manifest, "JSONL manifest path")->required();
    kb_ingest->add_option("--index", ingest_index, "Index directory")->required();
    kb_ingest->add_option("--embed-model", ingest_embed, "Embedding model id");

    auto* kb_search = kb->add_subcommand("search", "Search the index");
    std::string search_index, search_mode = "hybrid", search_query, search_embed = "stub:hash64";
    std::vector<std::string> search_glottocodes, search_families, search_macroareas,
        search_countries;
    int search_top_k = 5;
    kb_search->add_option("--index", search_index, "Index directory")->required();
    kb_search->add_option("--mode", search_mode, "fulltext | vector | hybrid");
    kb_search->add_option("--glottocode", search_glottocodes, "Filter by glottocode");
    kb_search->add_option("--family", search_families, "Filter by language family");
    kb_search->add_option("--macroarea", search_macroareas, "Filter by macroarea");
    kb_search->add_option("--country", search_countries, "Filter by country");
    kb_search->add_option("--top-k", search_top_k, "Result count");
    kb_search->add_option("--embed-model", search_embed, "Embedding model id");
    kb_search->add_option("query", search_query, "Query text")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        harness::RunConfig cfg = load_config(globals);

        if (run->parsed()) {
            if (globals.config_path.empty()) {
                std::cerr << "config error: run requires --config\n";
                return harness::kExitConfig;
            }
            return harness::cmd_run(cfg);
        }
        if (probe->parsed()) {
            if (!probe_corpus.empty()) cfg.probe.corpus = probe_corpus;
            if (!probe_languages.empty()) cfg.probe.languages = probe_languages;
            if (!probe_mapping.empty()) cfg.probe.mapping = probe_mapping;
            if (!probe_direction.empty()) cfg.probe.direction = probe_direction;
            if (!probe_model.empty()) cfg.probe.model = probe_model;
            if (probe_k > 0) cfg.probe.sentences_per_language = probe_k;
            return harness::cmd_probe(cfg, cfg.output_dir);
        }
        if (judge->parsed()) {
            if (!judge_model.empty()) cfg.judge.model = judge_model;
            if (!judge_rubric.empty()) cfg.judge.rubric = judge_rubric;
            return harness::cmd_judge(cfg, judge_record, judge_problems, cfg.output_dir);
        }
        if (gen->parsed()) {
            return harness::cmd_gen_reasoning(cfg, gen_problems, gen_model, cfg.output_dir);
        }
        if (report->parsed()) {
            std::vector<std::filesystem::path> paths(report_records.begin(),
                                                     report_records.end());
            return harness::cmd_report(paths, cfg.output_dir);
        }
        if (kb_ingest->parsed()) {
            return harness::cmd_kb_ingest(cfg, ingest_manifest, ingest_index, ingest_embed);
        }
        if (kb_search->parsed()) {
            harness::SearchQuery query;
            query.text = search_query;
            if (search_mode == "fulltext") {
                query.mode = harness::SearchMode::FullText;
            } else if (search_mode == "vector") {
                query.mode = harness::SearchMode::Vector;
            } else if (search_mode == "hybrid") {
                query.mode = harness::SearchMode::Hybrid;
            } else {
                std::cerr << "config error: unknown search mode " << search_mode << "\n";
                return harness::kExitConfig;
            }
            query.filters.glottocodes.insert(search_glottocodes.begin(), search_glottocodes.end());
            query.filters.families.insert(search_families.begin(), search_families.end());
            query.filters.macroareas.insert(search_macroareas.begin(), search_macroareas.end());
            query.filters.countries.insert(search_countries.begin(), search_countries.end());
            query.top_k = search_top_k;
            return harness::cmd_kb_search(cfg, search_index, query, search_embed);
        }
    } catch (const harness::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return harness::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return harness::kExitRuntime;
    }
    return harness::kExitOk;
}
