// pencil: batch generation, tracing, simulation, checking and export.
// Exit codes: 0 success, 1 a check failed, 2 bad usage or bad input.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "pencil/datasets.hpp"
#include "pencil/fasp.hpp"
#include "pencil/parallel.hpp"
#include "pencil/rng.hpp"
#include "pencil/turing.hpp"

using namespace pencil;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorpusFlags {
    std::string task = "sat";
    int n = 3;
    std::optional<int> houses, categories;
    std::size_t count = 1;
    std::optional<std::uint64_t> seed;
    bool no_balance = false;
    std::string rule = "full";
};

void add_corpus_flags(CLI::App* cmd, CorpusFlags& f, std::size_t default_count) {
    f.count = default_count;
    cmd->add_option("--task", f.task, "sat, qbf or puzzle")->check(CLI::IsMember({"sat", "qbf", "puzzle"}));
    cmd->add_option("--n", f.n, "variables (sat/qbf) or houses and categories (puzzle)");
    cmd->add_option("--houses", f.houses, "puzzle houses, 3..5");
    cmd->add_option("--categories", f.categories, "puzzle categories, 3..5");
    cmd->add_option("--count", f.count, "number of instances");
    cmd->add_option("--seed", f.seed, "base seed (required)");
    cmd->add_flag("--no-balance", f.no_balance, "keep the natural True/False ratio");
    cmd->add_option("--rule", f.rule, "reduction rule")->check(CLI::IsMember({"full", "simplified"}));
}

CorpusConfig corpus_config(const CorpusFlags& f, unsigned jobs, bool balance_default) {
    if (!f.seed) throw UsageError("--seed is required");
    CorpusConfig cfg;
    cfg.task.task = parse_task(f.task);
    cfg.task.n = f.n;
    cfg.task.houses = f.houses.value_or(f.n);
    cfg.task.categories = f.categories.value_or(f.n);
    cfg.count = f.count;
    cfg.seed = *f.seed;
    cfg.balance = balance_default && !f.no_balance;
    cfg.jobs = jobs;
    try {
        validate(cfg.task);
    } catch (const DatasetError& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

Rule rule_of(const CorpusFlags& f) { return f.rule == "simplified" ? Rule::Simplified : Rule::Full; }

std::string tag(const Instance& inst) {
    return "instance " + std::to_string(inst.id) + " (seed " + std::to_string(inst.seed) + ")";
}

std::vector<PencilRun> run_all(const std::vector<Instance>& corpus, Rule rule, unsigned jobs) {
    std::vector<PencilRun> runs(corpus.size());
    parallel_for(corpus.size(), jobs, [&](std::size_t i) { runs[i] = pencil_run(corpus[i].trace, rule); });
    return runs;
}

std::ostream& open_sink(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw UsageError("cannot write " + path);
    return file;
}

int cmd_gen(const CorpusFlags& f, unsigned jobs, const std::string& out) {
    auto corpus = gen_corpus(corpus_config(f, jobs, true));
    std::ofstream file;
    std::ostream& o = open_sink(out, file);
    for (const auto& inst : corpus)
        o << json{{"id", inst.id}, {"seed", inst.seed}, {"label", inst.label}, {"prompt", to_string(inst.trace.prompt)}}
                 .dump()
          << '\n';
    return 0;
}

int cmd_trace(const CorpusFlags& f, unsigned jobs) {
    auto cfg = corpus_config(f, jobs, false);
    auto corpus = gen_corpus(cfg);
    std::vector<std::string> oracle(corpus.size());
    parallel_for(corpus.size(), jobs, [&](std::size_t i) { oracle[i] = brute_force_label(cfg.task, corpus[i].seed); });
    int rc = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& inst = corpus[i];
        const bool ok = inst.label == oracle[i];
        if (!ok) {
            std::cerr << tag(inst) << ": trace answer " << inst.label << " but exhaustive search gives " << oracle[i]
                      << '\n';
            rc = 1;
        }
        std::cout << json{{"id", inst.id},          {"seed", inst.seed},
                          {"answer", inst.label},   {"oracle", oracle[i]},
                          {"ok", ok},               {"prompt", to_string(inst.trace.prompt)},
                          {"response", to_string(inst.trace.response)}}
                         .dump()
                  << '\n';
    }
    return rc;
}

int cmd_pencil(const CorpusFlags& f, unsigned jobs) {
    auto cfg = corpus_config(f, jobs, false);
    auto corpus = gen_corpus(cfg);
    auto runs = run_all(corpus, rule_of(f), jobs);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& inst = corpus[i];
        const auto& run = runs[i];
        const auto fl = flops(run);
        std::cout << json{{"id", inst.id},
                          {"seed", inst.seed},
                          {"answer", answer_from_context(cfg.task.task, run.final_context)},
                          {"reductions", run.reductions},
                          {"max_context", run.max_context},
                          {"total_generated", run.total_generated},
                          {"scaffold_len", inst.trace.prompt.size() + run.total_generated},
                          {"flops", fl.total},
                          {"final", to_string(run.final_context)}}
                         .dump()
                  << '\n';
    }
    return 0;
}

struct TmFlags {
    std::string tm_path;
    std::optional<std::uint64_t> random_tm_seed;
    std::size_t max_steps = 300;
};

void add_tm_flags(CLI::App* cmd, TmFlags& f) {
    auto* path = cmd->add_option("--tm", f.tm_path, "machine description file")->check(CLI::ExistingFile);
    auto* rnd = cmd->add_option("--random-tm", f.random_tm_seed, "use a random machine drawn with this seed");
    path->excludes(rnd);
    cmd->add_option("--max-steps", f.max_steps, "step cap");
}

TMSpec load_machine(const TmFlags& f) {
    if (!f.tm_path.empty()) return load_tm(f.tm_path);
    if (f.random_tm_seed) return random_tm(*f.random_tm_seed);
    throw UsageError("one of --tm or --random-tm is required");
}

int cmd_tm_sim(const TmFlags& f, const std::string& input_text, bool with_pencil) {
    TMSpec spec = load_machine(f);
    auto input = parse_input(spec, input_text);
    auto direct = tm_run(spec, input, f.max_steps);
    json j{{"verdict", to_string(direct.verdict)}, {"steps", direct.steps}, {"space", direct.space}};
    int rc = 0;
    if (with_pencil) {
        auto p = run_pencil_tm(spec, input, f.max_steps);
        const std::size_t S = p.state_space, T = p.steps;
        const bool context_ok = p.max_context <= 3 * S + 4;
        const bool tokens_ok = p.total_tokens <= 4 * T + S + 4;
        const bool verdict_ok = p.verdict == direct.verdict && p.steps == direct.steps;
        j["pencil"] = {{"verdict", to_string(p.verdict)},
                       {"steps", p.steps},
                       {"total_tokens", p.total_tokens},
                       {"max_context", p.max_context},
                       {"state_space", S},
                       {"reductions", p.reductions},
                       {"context_bound_ok", context_ok},
                       {"token_bound_ok", tokens_ok},
                       {"agrees", verdict_ok}};
        if (!context_ok || !tokens_ok || !verdict_ok) {
            std::cerr << "tm-sim: PENCIL simulation disagrees with the direct run or exceeds its bounds\n";
            rc = 1;
        }
    }
    std::cout << j.dump() << '\n';
    return rc;
}

int cmd_fasp_check(const TmFlags& f, std::size_t random_tms, std::size_t n_inputs, std::size_t max_len,
                   std::uint64_t seed, unsigned jobs) {
    std::vector<TMSpec> specs;
    if (!f.tm_path.empty() || f.random_tm_seed) {
        specs.push_back(load_machine(f));
    } else {
        if (random_tms == 0) throw UsageError("give --tm, --random-tm or --random-tms");
        for (std::size_t m = 0; m < random_tms; ++m) specs.push_back(random_tm(derive_seed(seed, m)));
    }
    std::vector<fasp::TmCheck> checks(specs.size());
    std::vector<std::size_t> program_sizes(specs.size());
    parallel_for(specs.size(), jobs, [&](std::size_t m) {
        std::vector<std::vector<int>> inputs;
        for (std::size_t i = 0; i < n_inputs; ++i)
            inputs.push_back(random_input(specs[m], derive_seed(derive_seed(seed, m), i + 1000), max_len));
        auto prog = fasp::build_tm_program(specs[m]);
        program_sizes[m] = prog.size();
        checks[m] = fasp::check_tm_program(specs[m], prog, inputs, f.max_steps);
    });
    int rc = 0;
    for (std::size_t m = 0; m < specs.size(); ++m) {
        const auto& c = checks[m];
        if (!c.ok()) {
            std::cerr << "machine " << m << ": " << c.first_failure << '\n';
            rc = 1;
        }
        std::cout << json{{"machine", m},
                          {"program_nodes", program_sizes[m]},
                          {"runs", c.runs},
                          {"tokens_checked", c.tokens_checked},
                          {"mismatches", c.mismatches},
                          {"ambiguous", c.ambiguous},
                          {"ok", c.ok()}}
                         .dump()
                  << '\n';
    }
    return rc;
}

json stats_json(const CorpusStats& s) {
    return json{{"instances", s.instances},
                {"max_len_with_reduction", s.max_len_with_reduction},
                {"max_len_without", s.max_len_without},
                {"space_ratio", s.space_ratio()},
                {"total_generated", s.total_generated},
                {"total_scaffold", s.total_scaffold},
                {"total_reductions", s.total_reductions},
                {"label_balance", s.label_balance}};
}

int cmd_stats(const CorpusFlags& f, unsigned jobs, const std::string& csv) {
    auto cfg = corpus_config(f, jobs, true);
    auto corpus = gen_corpus(cfg);
    auto runs = run_all(corpus, rule_of(f), jobs);
    std::vector<RunRecord> recs;
    for (std::size_t i = 0; i < corpus.size(); ++i) recs.push_back({&corpus[i], std::move(runs[i])});
    if (!csv.empty()) write_stats_csv(csv, cfg.task, recs);
    std::cout << stats_json(corpus_stats(recs)).dump() << '\n';
    return 0;
}

int cmd_export(const CorpusFlags& f, unsigned jobs, const std::string& out_dir) {
    auto cfg = corpus_config(f, jobs, true);
    const Rule rule = rule_of(f);
    auto corpus = gen_corpus(cfg);
    auto runs = run_all(corpus, rule, jobs);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    Vocab vocab = corpus_vocab(corpus);
    std::vector<TrainingExample> pencil_ex, cot_ex;
    std::vector<ReductionCase> cases;
    std::vector<RunRecord> recs;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& inst = corpus[i];
        auto ex = split_scaffolded(runs[i], inst.trace.prompt, vocab, inst.id);
        pencil_ex.insert(pencil_ex.end(), ex.begin(), ex.end());
        cot_ex.push_back(export_cot(inst.trace.scaffold(), inst.trace.prompt, vocab, inst.id));
        auto rc = reduction_cases(runs[i], inst.trace.prompt, rule);
        cases.insert(cases.end(), rc.begin(), rc.end());
        recs.push_back({&inst, std::move(runs[i])});
    }
    export_jsonl(pencil_ex, (dir / "pencil.jsonl").string());
    export_jsonl(cot_ex, (dir / "cot.jsonl").string());
    export_vocab(vocab, (dir / "vocab.txt").string());
    export_reduction_fixture(cases, (dir / "reduction_fixture.jsonl").string());
    write_stats_csv((dir / "stats.csv").string(), cfg.task, recs);

    json files = json::object();
    for (const char* name : {"pencil.jsonl", "cot.jsonl", "vocab.txt", "reduction_fixture.jsonl", "stats.csv"})
        files[name] = fs::file_size(dir / name);
    std::cout << json{{"dir", out_dir},
                      {"instances", corpus.size()},
                      {"pencil_examples", pencil_ex.size()},
                      {"cot_examples", cot_ex.size()},
                      {"vocab_size", vocab.size()},
                      {"reduction_cases", cases.size()},
                      {"bytes", files}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_verify(const CorpusFlags& f, unsigned jobs) {
    auto cfg = corpus_config(f, jobs, false);
    auto corpus = gen_corpus(cfg);
    std::vector<std::string> problems(corpus.size());
    parallel_for(corpus.size(), jobs, [&](std::size_t i) {
        const auto& inst = corpus[i];
        const auto oracle = brute_force_label(cfg.task, inst.seed);
        if (inst.label != oracle) {
            problems[i] = "trace answer " + inst.label + ", exhaustive search " + oracle;
            return;
        }
        const auto run = pencil_run(inst.trace, rule_of(f));
        const auto got = answer_from_context(cfg.task.task, run.final_context);
        if (!run.terminated || got != oracle) problems[i] = "PENCIL answer '" + got + "', expected " + oracle;
    });
    std::size_t failures = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (problems[i].empty()) continue;
        ++failures;
        std::cerr << tag(corpus[i]) << ": " << problems[i] << '\n';
    }
    std::cout << json{{"task", f.task}, {"checked", corpus.size()}, {"failures", failures}}.dump() << '\n';
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PENCIL runtime: traces, reductions, machine simulation and dataset export"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned jobs = default_jobs();
    app.add_option("--jobs", jobs, "worker threads (default: PENCIL_JOBS or 1)")->check(CLI::PositiveNumber);

    CorpusFlags gen_f, trace_f, pencil_f, stats_f, export_f, verify_f;
    std::string gen_out, stats_csv, export_dir;
    auto* gen = app.add_subcommand("gen", "generate problem instances (JSON lines)");
    add_corpus_flags(gen, gen_f, 1);
    gen->add_option("--out", gen_out, "output file (default stdout)");
    auto* trace = app.add_subcommand("trace", "print reasoning traces and check answers by exhaustive search");
    add_corpus_flags(trace, trace_f, 1);
    auto* pencil = app.add_subcommand("pencil", "run the generate-reduce loop on generated traces");
    add_corpus_flags(pencil, pencil_f, 1);
    auto* stats = app.add_subcommand("stats", "corpus statistics with and without reduction");
    add_corpus_flags(stats, stats_f, 100);
    stats->add_option("--csv", stats_csv, "also write per-instance rows here");
    auto* exp = app.add_subcommand("export", "write training corpora, vocabulary, stats and reduction fixture");
    add_corpus_flags(exp, export_f, 100);
    exp->add_option("--out", export_dir, "output directory")->required();
    auto* verify = app.add_subcommand("verify", "check trace and PENCIL answers against exhaustive search");
    add_corpus_flags(verify, verify_f, 100);

    TmFlags sim_f, check_f;
    std::string sim_input;
    bool sim_pencil = false;
    auto* sim = app.add_subcommand("tm-sim", "run a machine directly and optionally through PENCIL");
    add_tm_flags(sim, sim_f);
    sim->add_option("--input", sim_input, "input symbols separated by spaces");
    sim->add_flag("--pencil", sim_pencil, "also run the PENCIL simulation and check its bounds");

    std::size_t random_tms = 0, n_inputs = 20, max_len = 6;
    std::uint64_t check_seed = 0;
    auto* check = app.add_subcommand("fasp-check", "compare the compiled next-token program with the simulation");
    add_tm_flags(check, check_f);
    check->add_option("--random-tms", random_tms, "number of random machines");
    check->add_option("--inputs", n_inputs, "random inputs per machine");
    check->add_option("--max-len", max_len, "longest random input");
    check->add_option("--seed", check_seed, "seed for machines and inputs (default 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*gen) return cmd_gen(gen_f, jobs, gen_out);
        if (*trace) return cmd_trace(trace_f, jobs);
        if (*pencil) return cmd_pencil(pencil_f, jobs);
        if (*stats) return cmd_stats(stats_f, jobs, stats_csv);
        if (*exp) return cmd_export(export_f, jobs, export_dir);
        if (*verify) return cmd_verify(verify_f, jobs);
        if (*sim) return cmd_tm_sim(sim_f, sim_input, sim_pencil);
        if (*check) return cmd_fasp_check(check_f, random_tms, n_inputs, max_len, check_seed, jobs);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const TmError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
