#include "pencil/datasets.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pencil/parallel.hpp"
#include "pencil/puzzle.hpp"
#include "pencil/qbf.hpp"
#include "pencil/rng.hpp"

namespace pencil {

using nlohmann::json;

std::string to_string(Task t) {
    switch (t) {
        case Task::Sat: return "sat";
        case Task::Qbf: return "qbf";
        case Task::Puzzle: return "puzzle";
    }
    return "?";
}

Task parse_task(std::string_view name) {
    if (name == "sat") return Task::Sat;
    if (name == "qbf") return Task::Qbf;
    if (name == "puzzle") return Task::Puzzle;
    throw DatasetError("unknown task '" + std::string(name) + "' (expected sat, qbf or puzzle)");
}

void validate(const TaskConfig& cfg) {
    switch (cfg.task) {
        case Task::Sat:
        case Task::Qbf:
            if (cfg.n < 1 || cfg.n > 20)
                throw DatasetError(to_string(cfg.task) + ": n must be in 1..20, got " + std::to_string(cfg.n));
            break;
        case Task::Puzzle:
            if (cfg.houses < 3 || cfg.houses > 5 || cfg.categories < 3 || cfg.categories > 5)
                throw DatasetError("puzzle: houses and categories must be in 3..5, got " + std::to_string(cfg.houses) +
                                   "x" + std::to_string(cfg.categories));
            break;
    }
}

namespace {

std::string size_label(const TaskConfig& cfg) {
    if (cfg.task == Task::Puzzle) return std::to_string(cfg.houses) + "x" + std::to_string(cfg.categories);
    return std::to_string(cfg.n);
}

const char* rule_name(Rule r) { return r == Rule::Full ? "full" : "simplified"; }

Rule parse_rule(const std::string& s, const std::string& where) {
    if (s == "full") return Rule::Full;
    if (s == "simplified") return Rule::Simplified;
    throw DatasetError(where + ": unknown rule '" + s + "'");
}

json surfaces(const TokenSeq& seq) {
    json a = json::array();
    for (Token t : seq) a.push_back(t.surface());
    return a;
}

TokenSeq parse_surfaces(const json& a) {
    TokenSeq out;
    for (const auto& w : a) out.push_back(Token::parse(w.get<std::string>()));
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError("cannot write " + path);
    return out;
}

void check_written(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw DatasetError("write failed for " + path);
}

// Σ_{k=a+1..b} k, doubled: (a + b + 1)(b - a).
std::uint64_t doubled_range_sum(std::size_t a, std::size_t b) {
    return static_cast<std::uint64_t>(a + b + 1) * static_cast<std::uint64_t>(b - a);
}

}  // namespace

Instance make_instance(const TaskConfig& cfg, std::size_t id, std::uint64_t seed) {
    Instance inst;
    inst.id = id;
    inst.seed = seed;
    switch (cfg.task) {
        case Task::Sat: {
            auto t = dpll_trace(gen_sat(cfg.n, seed));
            inst.label = t.answer ? "True" : "False";
            inst.trace = std::move(t);
            break;
        }
        case Task::Qbf: {
            auto t = qbf_trace(gen_qbf(cfg.n, seed));
            inst.label = t.answer ? "True" : "False";
            inst.trace = std::move(t);
            break;
        }
        case Task::Puzzle: {
            auto t = puzzle_trace(gen_puzzle(cfg.houses, cfg.categories, seed));
            inst.label = t.solution ? t.fish_owner : "none";
            inst.trace = std::move(t);
            break;
        }
    }
    return inst;
}

std::string brute_force_label(const TaskConfig& cfg, std::uint64_t seed) {
    switch (cfg.task) {
        case Task::Sat: return brute_force_sat(gen_sat(cfg.n, seed)) ? "True" : "False";
        case Task::Qbf: return brute_force_qbf(gen_qbf(cfg.n, seed)) ? "True" : "False";
        case Task::Puzzle: {
            auto p = gen_puzzle(cfg.houses, cfg.categories, seed);
            auto sols = brute_force_puzzle(p, 2);
            if (sols.size() != 1) return "none";
            int pet = -1, nat = -1;
            for (int c = 0; c < p.categories; ++c) {
                if (category_name(c) == "Pet") pet = c;
                if (category_name(c) == "Nationality") nat = c;
            }
            const auto pets = category_values(pet, p.houses);
            const auto nats = category_values(nat, p.houses);
            for (const auto& house : sols.front())
                if (pets[static_cast<std::size_t>(house[static_cast<std::size_t>(pet)])] == "Fish")
                    return nats[static_cast<std::size_t>(house[static_cast<std::size_t>(nat)])];
            return "none";
        }
    }
    return "none";
}

std::string answer_from_context(Task task, const TokenSeq& ctx) {
    const std::string key = task == Task::Puzzle ? "owns" : "Answer:";
    for (std::size_t i = ctx.size(); i-- > 0;) {
        if (ctx[i].surface() != key) continue;
        if (task == Task::Puzzle) return i >= 1 ? ctx[i - 1].surface() : "";
        return i + 1 < ctx.size() ? ctx[i + 1].surface() : "";
    }
    return "";
}

std::vector<Instance> gen_corpus(const CorpusConfig& cfg) {
    validate(cfg.task);
    const bool balance = cfg.balance && cfg.task.task != Task::Puzzle;
    const std::size_t max_attempts = cfg.max_attempts ? cfg.max_attempts : 200 * std::max<std::size_t>(cfg.count, 1);
    const std::size_t quota_true = (cfg.count + 1) / 2, quota_false = cfg.count / 2;
    std::size_t n_true = 0, n_false = 0;

    std::vector<Instance> out;
    out.reserve(cfg.count);
    std::size_t attempt = 0;
    const std::size_t chunk = std::max<std::size_t>(16, 4 * static_cast<std::size_t>(cfg.jobs));
    while (out.size() < cfg.count) {
        if (attempt >= max_attempts)
            throw DatasetError("gen_corpus: could not fill a balanced corpus of " + std::to_string(cfg.count) +
                               " after " + std::to_string(max_attempts) + " candidates");
        const std::size_t batch = std::min(chunk, max_attempts - attempt);
        std::vector<Instance> cand(batch);
        parallel_for(batch, cfg.jobs, [&](std::size_t i) {
            cand[i] = make_instance(cfg.task, 0, derive_seed(cfg.seed, attempt + i));
        });
        attempt += batch;
        for (auto& c : cand) {
            if (out.size() == cfg.count) break;
            if (balance) {
                auto& have = c.label == "True" ? n_true : n_false;
                const auto quota = c.label == "True" ? quota_true : quota_false;
                if (have == quota) continue;
                ++have;
            }
            c.id = out.size();
            out.push_back(std::move(c));
        }
    }
    return out;
}

PencilRun pencil_run(const TaskTrace& trace, Rule rule) {
    PencilOptions opt;
    opt.rule = rule;
    opt.limits.max_context = std::numeric_limits<std::size_t>::max();
    return run_pencil(make_oracle_predictor(trace.scaffold(), trace.prompt.size(), rule), trace.prompt, opt);
}

std::vector<TrainingExample> split_scaffolded(const PencilRun& run, const TokenSeq& prompt, const Vocab& vocab,
                                              std::size_t instance_id) {
    std::vector<TrainingExample> out;
    out.reserve(run.iterations.size());
    const TokenSeq* start = &prompt;
    for (std::size_t i = 0; i < run.iterations.size(); ++i) {
        const Iteration& it = run.iterations[i];
        if (start->size() != it.start_len)
            throw DatasetError("split_scaffolded: iteration " + std::to_string(i) + " starts at length " +
                               std::to_string(it.start_len) + " but the previous context has " +
                               std::to_string(start->size()));
        TrainingExample e;
        e.instance_id = instance_id;
        e.iteration = i;
        e.loss_start = start->size();
        e.tokens = vocab.ids(*start);
        auto delta = vocab.ids(it.delta);
        e.tokens.insert(e.tokens.end(), delta.begin(), delta.end());
        out.push_back(std::move(e));
        if (it.reduced) start = &*it.reduced;
    }
    return out;
}

TrainingExample export_cot(const TokenSeq& scaffold, const TokenSeq& prompt, const Vocab& vocab,
                           std::size_t instance_id) {
    TrainingExample e;
    e.instance_id = instance_id;
    e.loss_start = prompt.size();
    e.tokens = vocab.ids(scaffold);
    if (scaffold.empty() || scaffold.back() != kEndOfText) e.tokens.push_back(vocab.id_of(kEndOfText));
    return e;
}

FlopsReport flops(const PencilRun& run) {
    FlopsReport r;
    for (const auto& it : run.iterations) {
        r.generation_term += doubled_range_sum(it.start_len, it.full_len);
        // x^(i+0.5) = C A; only A has to be recomputed.
        if (it.reduced) r.reduction_term += doubled_range_sum(it.kept, it.kept + it.answer_len);
    }
    r.total = r.generation_term + r.reduction_term;
    return r;
}

std::uint64_t cot_flops(std::size_t prompt_len, std::size_t scaffold_len) {
    return doubled_range_sum(prompt_len, scaffold_len);
}

double CorpusStats::space_ratio() const {
    return max_len_with_reduction ? static_cast<double>(max_len_without) / static_cast<double>(max_len_with_reduction)
                                  : 0.0;
}

CorpusStats corpus_stats(const std::vector<RunRecord>& records) {
    CorpusStats s;
    for (const auto& rec : records) {
        const std::size_t prompt_len = rec.instance->trace.prompt.size();
        const std::size_t scaffold_len = prompt_len + rec.run.total_generated;
        ++s.instances;
        s.max_len_with_reduction = std::max(s.max_len_with_reduction, rec.run.max_context);
        s.max_len_without = std::max(s.max_len_without, scaffold_len);
        s.total_generated += rec.run.total_generated;
        s.total_scaffold += scaffold_len;
        s.total_reductions += rec.run.reductions;
        ++s.label_balance[rec.instance->label];
    }
    return s;
}

void write_stats_csv(const std::string& path, const TaskConfig& cfg, const std::vector<RunRecord>& records) {
    auto out = open_out(path);
    out << kStatsHeader << '\n';
    for (const auto& rec : records) {
        const Instance& inst = *rec.instance;
        const std::size_t prompt_len = inst.trace.prompt.size();
        const std::size_t scaffold_len = prompt_len + rec.run.total_generated;
        const auto f = flops(rec.run);
        out << inst.id << ',' << inst.seed << ',' << to_string(cfg.task) << ',' << size_label(cfg) << ','
            << inst.label << ',' << prompt_len << ',' << scaffold_len << ',' << rec.run.max_context << ','
            << rec.run.total_generated << ',' << rec.run.reductions << ',' << f.generation_term << ','
            << f.reduction_term << ',' << cot_flops(prompt_len, scaffold_len) << '\n';
    }
    check_written(out, path);
}

Vocab corpus_vocab(const std::vector<Instance>& corpus) {
    std::vector<TokenSeq> seqs;
    seqs.reserve(corpus.size());
    for (const auto& inst : corpus) seqs.push_back(inst.trace.scaffold());
    return Vocab::build(seqs);
}

std::string to_jsonl_line(const TrainingExample& e) {
    // field order is fixed by hand so files are byte-stable
    std::ostringstream o;
    o << "{\"tokens\":[";
    for (std::size_t i = 0; i < e.tokens.size(); ++i) o << (i ? "," : "") << e.tokens[i];
    o << "],\"loss_start\":" << e.loss_start << ",\"instance_id\":" << e.instance_id << ",\"iteration\":" << e.iteration
      << "}";
    return o.str();
}

void export_jsonl(const std::vector<TrainingExample>& examples, const std::string& path) {
    auto out = open_out(path);
    for (const auto& e : examples) out << to_jsonl_line(e) << '\n';
    check_written(out, path);
}

std::vector<TrainingExample> load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open " + path);
    std::vector<TrainingExample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        try {
            auto j = json::parse(line);
            TrainingExample e;
            e.tokens = j.at("tokens").get<std::vector<std::uint32_t>>();
            e.loss_start = j.at("loss_start").get<std::size_t>();
            e.instance_id = j.at("instance_id").get<std::size_t>();
            e.iteration = j.at("iteration").get<std::size_t>();
            if (e.loss_start == 0 || e.loss_start >= e.tokens.size())
                throw DatasetError(where + ": loss_start " + std::to_string(e.loss_start) + " outside 1.." +
                                   std::to_string(e.tokens.size() ? e.tokens.size() - 1 : 0));
            out.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw DatasetError(where + ": " + ex.what());
        }
    }
    return out;
}

void export_vocab(const Vocab& vocab, const std::string& path) {
    try {
        vocab.save(path);
    } catch (const TokenError& e) {
        throw DatasetError(e.what());
    }
}

std::vector<ReductionCase> reduction_cases(const PencilRun& run, const TokenSeq& prompt, Rule rule) {
    std::vector<ReductionCase> out;
    TokenSeq ctx = prompt;
    for (const auto& it : run.iterations) {
        ctx.insert(ctx.end(), it.delta.begin(), it.delta.end());
        if (!it.reduced) break;
        out.push_back({rule, ctx, *it.reduced});
        ctx = *it.reduced;
    }
    return out;
}

void export_reduction_fixture(const std::vector<ReductionCase>& cases, const std::string& path) {
    auto out = open_out(path);
    for (const auto& c : cases) {
        json j = json::object();
        j["rule"] = rule_name(c.rule);
        j["input"] = surfaces(c.input);
        j["output"] = surfaces(c.output);
        out << j.dump() << '\n';
    }
    check_written(out, path);
}

std::vector<ReductionCase> load_reduction_fixture(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open " + path);
    std::vector<ReductionCase> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        try {
            auto j = json::parse(line);
            out.push_back({parse_rule(j.at("rule").get<std::string>(), where), parse_surfaces(j.at("input")),
                           parse_surfaces(j.at("output"))});
        } catch (const json::exception& ex) {
            throw DatasetError(where + ": " + ex.what());
        } catch (const TokenError& ex) {
            throw DatasetError(where + ": " + ex.what());
        }
    }
    return out;
}

}  // namespace pencil
