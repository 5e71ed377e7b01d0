#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "golden_util.hpp"
#include "pencil/datasets.hpp"
#include "pencil/qbf.hpp"

using namespace pencil;
namespace fs = std::filesystem;

namespace {

Predictor scripted(TokenSeq out) {
    auto pos = std::make_shared<std::size_t>(0);
    return [out, pos](const TokenSeq&) { return out.at((*pos)++); };
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "pencil_dataset_tests";
    fs::create_directories(dir);
    return dir / name;
}

// Counts attention work token by token: every generated token attends to the
// whole context including itself, and after a reduction every token that is
// not part of the untouched prefix C is recomputed against its new prefix.
std::uint64_t counting_oracle(const TokenSeq& prompt, const TokenSeq& scaffold) {
    std::uint64_t cost = 0;
    TokenSeq ctx = prompt;
    for (std::size_t i = prompt.size(); i < scaffold.size(); ++i) {
        ctx.push_back(scaffold[i]);
        cost += ctx.size();
        if (ctx.back() != kReturn) continue;
        auto m = match_rule(ctx);
        REQUIRE(m);
        TokenSeq next(ctx.begin(), ctx.begin() + static_cast<std::ptrdiff_t>(m->c.end));
        for (std::size_t j = m->a.begin; j < m->a.end; ++j) {
            next.push_back(ctx[j]);
            cost += next.size();
        }
        ctx = std::move(next);
    }
    return cost;
}

Instance golden_qbf() {
    auto f = parse_qbf_prompt(golden::read("qbf_cot_prompt.txt"));
    Instance inst;
    auto t = qbf_trace(f);
    inst.label = t.answer ? "True" : "False";
    inst.trace = t;
    return inst;
}

}  // namespace

TEST_CASE("single iteration flops match the arithmetic series") {
    TokenSeq prompt = tokenize("a b");
    auto run = run_pencil(scripted(tokenize("c d <|endoftext|>")), prompt);
    auto f = flops(run);
    CHECK(f.generation_term == 24);
    CHECK(f.reduction_term == 0);
    CHECK(f.total == 24);
    Vocab v = Vocab::build({tokenize("a b c d")});
    auto ex = split_scaffolded(run, prompt, v, 7);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].loss_start == prompt.size());
    CHECK(ex[0].instance_id == 7);
    CHECK(ex[0].tokens.back() == v.id_of(kEndOfText));
    auto cot = export_cot(scaffold(run, prompt), prompt, v, 7);
    CHECK(cot == ex[0]);
}

TEST_CASE("CoT export appends end of text once") {
    Vocab v = Vocab::build({tokenize("a b c")});
    auto e = export_cot(tokenize("a b c"), tokenize("a"), v, 0);
    CHECK(e.tokens.size() == 4);
    CHECK(e.tokens.back() == v.id_of(kEndOfText));
    CHECK(e.loss_start == 1);
    CHECK(export_cot(tokenize("a b c <|endoftext|>"), tokenize("a"), v, 0).tokens == e.tokens);
}

TEST_CASE("recorded QBF run splits into one example per reduction plus the final answer") {
    Instance inst = golden_qbf();
    auto run = pencil_run(inst.trace);
    REQUIRE(run.reductions == 25);
    Vocab v = corpus_vocab({inst});
    auto ex = split_scaffolded(run, inst.trace.prompt, v, 0);
    REQUIRE(ex.size() == 26);
    for (std::size_t i = 0; i + 1 < ex.size(); ++i) CHECK(ex[i].tokens.back() == v.id_of(kReturn));
    CHECK(ex.back().tokens.back() == v.id_of(kEndOfText));
    CHECK(flops(run).total == 2 * counting_oracle(inst.trace.prompt, inst.trace.scaffold()));
}

TEST_CASE("examples partition the generated tokens and rebuild the scaffold") {
    for (Task task : {Task::Sat, Task::Qbf, Task::Puzzle}) {
        CorpusConfig cfg;
        cfg.task.task = task;
        cfg.task.n = 5;
        cfg.count = 12;
        cfg.seed = 3;
        auto corpus = gen_corpus(cfg);
        Vocab v = corpus_vocab(corpus);
        for (const auto& inst : corpus) {
            CAPTURE(inst.seed);
            auto run = pencil_run(inst.trace);
            auto ex = split_scaffolded(run, inst.trace.prompt, v, inst.id);
            REQUIRE(ex.size() == run.reductions + 1);
            std::vector<std::uint32_t> rebuilt = v.ids(inst.trace.prompt);
            std::size_t covered = 0;
            for (std::size_t i = 0; i < ex.size(); ++i) {
                CHECK(ex[i].iteration == i);
                CHECK(ex[i].loss_start > 0);
                CHECK(ex[i].loss_start < ex[i].tokens.size());
                rebuilt.insert(rebuilt.end(), ex[i].tokens.begin() + static_cast<std::ptrdiff_t>(ex[i].loss_start),
                               ex[i].tokens.end());
                covered += ex[i].tokens.size() - ex[i].loss_start;
            }
            CHECK(covered == run.total_generated);
            CHECK(rebuilt == v.ids(inst.trace.scaffold()));
            CHECK(flops(run).total == 2 * counting_oracle(inst.trace.prompt, inst.trace.scaffold()));
        }
    }
}

TEST_CASE("corpus generation is balanced and independent of the job count") {
    CorpusConfig cfg;
    cfg.task.task = Task::Sat;
    cfg.task.n = 6;
    cfg.count = 21;
    cfg.seed = 11;
    auto a = gen_corpus(cfg);
    cfg.jobs = 4;
    auto b = gen_corpus(cfg);
    REQUIRE(a.size() == 21);
    REQUIRE(b.size() == 21);
    std::size_t n_true = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == i);
        CHECK(a[i].seed == b[i].seed);
        CHECK(a[i].trace.scaffold() == b[i].trace.scaffold());
        n_true += a[i].label == "True";
    }
    CHECK(n_true == 11);

    cfg.max_attempts = 3;
    CHECK_THROWS_AS(gen_corpus(cfg), DatasetError);
    cfg.task.n = 0;
    CHECK_THROWS_AS(gen_corpus(cfg), DatasetError);
    CHECK_THROWS_AS(parse_task("tsp"), DatasetError);
    CHECK(parse_task("puzzle") == Task::Puzzle);
}

TEST_CASE("corpus stats aggregate the runs") {
    CorpusConfig cfg;
    cfg.task.task = Task::Qbf;
    cfg.task.n = 4;
    cfg.count = 10;
    cfg.seed = 2;
    auto corpus = gen_corpus(cfg);
    std::vector<RunRecord> recs;
    for (const auto& inst : corpus) recs.push_back({&inst, pencil_run(inst.trace)});
    auto s = corpus_stats(recs);
    CHECK(s.instances == 10);
    CHECK(s.label_balance["True"] == 5);
    CHECK(s.label_balance["False"] == 5);
    std::size_t longest = 0, widest = 0;
    for (const auto& r : recs) {
        longest = std::max(longest, r.instance->trace.scaffold().size());
        widest = std::max(widest, r.run.max_context);
    }
    CHECK(s.max_len_without == longest);
    CHECK(s.max_len_with_reduction == widest);
    CHECK(s.space_ratio() > 1.0);

    auto path = scratch("stats.csv");
    write_stats_csv(path.string(), cfg.task, recs);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == kStatsHeader);
    std::size_t rows = 0;
    while (std::getline(in, row)) {
        ++rows;
        CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    }
    CHECK(rows == 10);
}

TEST_CASE("a run without reductions has equal maxima") {
    Instance inst;
    inst.label = "True";
    inst.trace.prompt = tokenize("a b");
    inst.trace.response = tokenize("c <|endoftext|>");
    auto s = corpus_stats({{&inst, pencil_run(inst.trace)}});
    CHECK(s.max_len_with_reduction == s.max_len_without);
    CHECK(s.max_len_without == 4);
}

TEST_CASE("JSONL and vocab exports reload identically and are byte-stable") {
    auto build = [](const fs::path& dir) {
        fs::create_directories(dir);
        CorpusConfig cfg;
        cfg.task.task = Task::Qbf;
        cfg.task.n = 4;
        cfg.count = 8;
        cfg.seed = 99;
        auto corpus = gen_corpus(cfg);
        Vocab v = corpus_vocab(corpus);
        std::vector<TrainingExample> pencil_ex, cot_ex;
        for (const auto& inst : corpus) {
            auto ex = split_scaffolded(pencil_run(inst.trace), inst.trace.prompt, v, inst.id);
            pencil_ex.insert(pencil_ex.end(), ex.begin(), ex.end());
            cot_ex.push_back(export_cot(inst.trace.scaffold(), inst.trace.prompt, v, inst.id));
        }
        export_jsonl(pencil_ex, (dir / "pencil.jsonl").string());
        export_jsonl(cot_ex, (dir / "cot.jsonl").string());
        export_vocab(v, (dir / "vocab.txt").string());
        return std::make_tuple(pencil_ex, cot_ex, v);
    };
    auto d1 = scratch("run1"), d2 = scratch("run2");
    auto [p1, c1, v1] = build(d1);
    build(d2);
    CHECK(load_jsonl((d1 / "pencil.jsonl").string()) == p1);
    CHECK(load_jsonl((d1 / "cot.jsonl").string()) == c1);
    CHECK(Vocab::load((d1 / "vocab.txt").string()) == v1);
    for (const char* f : {"pencil.jsonl", "cot.jsonl", "vocab.txt"}) {
        CAPTURE(f);
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    auto first = slurp(d1 / "pencil.jsonl").substr(0, 12);
    CHECK(first == "{\"tokens\":[3");
}

TEST_CASE("JSONL loader reports the offending line") {
    auto path = scratch("bad.jsonl");
    {
        std::ofstream out(path);
        out << "{\"tokens\":[1,2,3],\"loss_start\":1,\"instance_id\":0,\"iteration\":0}\n";
        out << "{\"tokens\":[1,2],\"loss_start\":2,\"instance_id\":0,\"iteration\":1}\n";
    }
    try {
        load_jsonl(path.string());
        FAIL("expected an error");
    } catch (const DatasetError& e) {
        CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_jsonl((scratch("nope") / "missing.jsonl").string()), DatasetError);
}

TEST_CASE("reduction fixture round-trips and agrees with reduce") {
    Instance inst = golden_qbf();
    std::vector<ReductionCase> cases;
    for (Rule rule : {Rule::Full, Rule::Simplified}) {
        auto run = pencil_run(inst.trace, rule);
        auto c = reduction_cases(run, inst.trace.prompt, rule);
        CHECK(c.size() == run.reductions);
        cases.insert(cases.end(), c.begin(), c.end());
    }
    for (const auto& c : cases) CHECK(apply_rule(c.rule, c.input) == c.output);
    auto path = scratch("reduction_fixture.jsonl");
    export_reduction_fixture(cases, path.string());
    CHECK(load_reduction_fixture(path.string()) == cases);
}

TEST_CASE("trace labels and PENCIL answers agree with exhaustive search") {
    for (Task task : {Task::Sat, Task::Qbf, Task::Puzzle}) {
        TaskConfig cfg;
        cfg.task = task;
        cfg.n = 5;
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            CAPTURE(seed);
            auto inst = make_instance(cfg, 0, seed);
            CHECK(inst.label == brute_force_label(cfg, seed));
            auto run = pencil_run(inst.trace);
            CHECK(run.terminated);
            CHECK(answer_from_context(task, run.final_context) == inst.label);
        }
    }
    CHECK(answer_from_context(Task::Sat, tokenize("a b")).empty());
}
