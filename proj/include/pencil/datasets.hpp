#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pencil/core.hpp"
#include "pencil/reduction.hpp"
#include "pencil/sat.hpp"

namespace pencil {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Task { Sat, Qbf, Puzzle };

std::string to_string(Task t);
Task parse_task(std::string_view name);

struct TaskConfig {
    Task task = Task::Sat;
    int n = 3;           // variables for sat/qbf
    int houses = 3;      // puzzle only
    int categories = 3;  // puzzle only
};

void validate(const TaskConfig& cfg);

// One generated problem with its trace. label is "True"/"False" for sat/qbf
// and the fish owner's nationality for puzzles.
struct Instance {
    std::size_t id = 0;
    std::uint64_t seed = 0;
    std::string label;
    TaskTrace trace;
};

Instance make_instance(const TaskConfig& cfg, std::size_t id, std::uint64_t seed);

// The label found by exhaustive search on the same generated problem.
std::string brute_force_label(const TaskConfig& cfg, std::uint64_t seed);

// Reads the verdict back from a finished context: the word after the last
// "Answer:" for sat/qbf, the owner before the last "owns" for puzzles.
// Empty when absent.
std::string answer_from_context(Task task, const TokenSeq& ctx);

struct CorpusConfig {
    TaskConfig task;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    // True/False in equal numbers (sat/qbf) by rejecting surplus candidates.
    bool balance = true;
    unsigned jobs = 1;
    std::size_t max_attempts = 0;  // 0 means 200 * count
};

// Candidates use derive_seed(seed, attempt) and are accepted in attempt order,
// so the corpus does not depend on jobs.
std::vector<Instance> gen_corpus(const CorpusConfig& cfg);

// Replays the trace through the generate-reduce loop. No context cap.
PencilRun pencil_run(const TaskTrace& trace, Rule rule = Rule::Full);

struct TrainingExample {
    std::vector<std::uint32_t> tokens;  // x^(i)
    std::size_t loss_start = 0;         // |x^(i-0.5)|
    std::size_t instance_id = 0;
    std::size_t iteration = 0;
    friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

// One example per iteration; the loss covers the tokens generated in it.
std::vector<TrainingExample> split_scaffolded(const PencilRun& run, const TokenSeq& prompt, const Vocab& vocab,
                                              std::size_t instance_id);

// The whole scaffold as one sequence, with <|endoftext|> appended if missing.
TrainingExample export_cot(const TokenSeq& scaffold, const TokenSeq& prompt, const Vocab& vocab,
                           std::size_t instance_id);

// Attention cost in abstract units (proportional to attention FLOPs).
// Generating token k of a context costs k; recomputing the kept answer after
// a reduction costs the same per token. Each term is twice that count.
struct FlopsReport {
    std::uint64_t generation_term = 0;
    std::uint64_t reduction_term = 0;
    std::uint64_t total = 0;
};

FlopsReport flops(const PencilRun& run);

// Cost of running the whole scaffold without reductions, same units.
std::uint64_t cot_flops(std::size_t prompt_len, std::size_t scaffold_len);

struct CorpusStats {
    std::size_t instances = 0;
    std::size_t max_len_with_reduction = 0;  // largest context seen by PENCIL
    std::size_t max_len_without = 0;         // largest scaffold
    std::uint64_t total_generated = 0;
    std::uint64_t total_scaffold = 0;
    std::uint64_t total_reductions = 0;
    std::map<std::string, std::size_t> label_balance;
    double space_ratio() const;
};

struct RunRecord {
    const Instance* instance = nullptr;
    PencilRun run;
};

CorpusStats corpus_stats(const std::vector<RunRecord>& records);

// One row per instance; see kStatsHeader.
inline constexpr std::string_view kStatsHeader =
    "instance_id,seed,task,size,label,prompt_len,scaffold_len,max_context,total_generated,reductions,"
    "generation_flops,reduction_flops,cot_flops";
void write_stats_csv(const std::string& path, const TaskConfig& cfg, const std::vector<RunRecord>& records);

// Vocabulary from the scaffolds: specials first, then first-seen order.
Vocab corpus_vocab(const std::vector<Instance>& corpus);

// {"tokens":[...],"loss_start":k,"instance_id":i,"iteration":j} per line.
void export_jsonl(const std::vector<TrainingExample>& examples, const std::string& path);
std::vector<TrainingExample> load_jsonl(const std::string& path);
std::string to_jsonl_line(const TrainingExample& e);
void export_vocab(const Vocab& vocab, const std::string& path);

// Input/output pairs of reduce(), one JSON object per line:
// {"rule":"full","input":[surfaces],"output":[surfaces]}.
struct ReductionCase {
    Rule rule = Rule::Full;
    TokenSeq input;
    TokenSeq output;
    friend bool operator==(const ReductionCase&, const ReductionCase&) = default;
};

std::vector<ReductionCase> reduction_cases(const PencilRun& run, const TokenSeq& prompt, Rule rule);
void export_reduction_fixture(const std::vector<ReductionCase>& cases, const std::string& path);
std::vector<ReductionCase> load_reduction_fixture(const std::string& path);

}  // namespace pencil
