#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/kb.hpp"
#include "harness/llm.hpp"
#include "harness/pipeline.hpp"

namespace harness {

// Exit codes are a stable contract: 0 success, 1 partial or runtime
// failure, 2 configuration/schema error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Gateway wired per config: stub models in-process, the rest over HTTP.
Gateway make_gateway(const RunConfig& cfg);

/// Stable JSON snapshot of the semantic run settings (no output or cache
/// paths), embedded in experiment records and hashed into the run id.
nlohmann::json config_snapshot(const RunConfig& cfg);

/// experiment.json, summary.csv and reports/<year>-<number>.json.
void write_experiment_outputs(const ExperimentRecord& record,
                              const std::filesystem::path& out_dir);

// Translation-probe prompt templates.
std::string probe_prompt_e2t(const std::string& target_lang, const std::string& script,
                             const std::string& sentence);
std::string probe_prompt_t2e(const std::string& target_lang, const std::string& sentence);

/// Draft-reasoning generation prompt over a problem and its official solution.
std::string reasoning_generation_prompt(const std::string& problem_text,
                                        const std::string& solution_text);

struct ProbeOutputs {
    std::string scores_csv;   // language,glottocode,script,class,direction,mean_chrf,n_missing
    std::string missing_csv;  // language,glottocode,direction,n_missing (rows with misses only)
    std::string summary_csv;  // direction,mean_chrf,n_scored,n_missing,spearman_rho,note
    std::string anova_csv;    // factor,direction,eta_p_squared,p_value
};

ProbeOutputs run_probe(const ProbeConfig& probe, Gateway& gateway);

int cmd_run(const RunConfig& cfg);
int cmd_probe(const RunConfig& cfg, const std::filesystem::path& out_dir);
int cmd_judge(const RunConfig& cfg, const std::filesystem::path& record_path,
              const std::filesystem::path& problems_path, const std::filesystem::path& out_dir);
int cmd_gen_reasoning(const RunConfig& cfg, const std::filesystem::path& problems_path,
                      const std::string& model, const std::filesystem::path& out_dir);
int cmd_report(const std::vector<std::filesystem::path>& record_paths,
               const std::filesystem::path& out_dir);
int cmd_kb_ingest(const RunConfig& cfg, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& index_dir, const std::string& embed_model);
int cmd_kb_search(const RunConfig& cfg, const std::filesystem::path& index_dir,
                  const SearchQuery& query, const std::string& embed_model);

}  // namespace harness
