#include "pencil/fasp.hpp"

namespace pencil::fasp {

// Follows the published listing line by line. Places where the listing
// cannot be taken literally are marked "adjusted".
Program build_tm_program(const TMSpec& spec) {
    validate(spec);
    TmCodec codec(spec);
    const std::size_t nq = spec.states.size();
    const std::size_t na = spec.alphabet.size();
    const std::size_t nsig = codec.all().size();  // |Q| * |A\{b}| * 3
    const std::size_t vocab_size = nsig + 2;
    const std::size_t sep_index = nsig, return_index = nsig + 1;

    std::vector<Token> vocab;
    for (const auto& u : codec.all()) vocab.push_back(codec.encode(u));
    vocab.push_back(kSep);
    vocab.push_back(kReturn);

    // non-blank symbol a -> its coordinate in A\{b}
    std::vector<int> nb_index(na, -1);
    for (std::size_t a = 0, k = 0; a < na; ++a)
        if (static_cast<int>(a) != spec.blank) nb_index[a] = static_cast<int>(k++);
    const std::size_t nnb = na - 1;

    Program p;

    // token primitives; [SEP] and [RETURN] embed as zeros
    std::unordered_map<Token, Vec> tok_tab, state_tab, symbol_tab, move_tab;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        Vec onehot(vocab_size, 0);
        onehot[i] = 1;
        tok_tab[vocab[i]] = onehot;
        Vec st(nq, 0), sy(na, 0), mv{0};
        if (i < nsig) {
            const UpdateToken& u = codec.all()[i];
            st[static_cast<std::size_t>(u.q)] = 1;
            sy[static_cast<std::size_t>(u.a)] = 1;
            mv[0] = u.d;
        }
        state_tab[vocab[i]] = st;
        symbol_tab[vocab[i]] = sy;
        move_tab[vocab[i]] = mv;
    }
    Expr get_token = p.define("get_token", p.token_embedding(tok_tab, vocab_size));
    Expr get_state = p.define("get_state", p.token_embedding(state_tab, nq));
    Expr get_symbol = p.define("get_symbol", p.token_embedding(symbol_tab, na));
    Expr get_move = p.define("get_move", p.token_embedding(move_tab, 1));
    Expr seq_len = p.define("sequence_len", p.seq_len());

    auto onehot_vocab = [&](std::size_t i) {
        Vec v(vocab_size, 0);
        v[i] = 1;
        return p.constant(v);
    };

    // Detect separator token
    Expr is_sep = p.define("is_sep", all_equal(get_token, onehot_vocab(sep_index)));
    Expr exist_sep = p.define("exist_sep", seq_or(is_sep));

    // Phase masks
    Expr sim_phase_mask = p.define("sim_phase_mask", not_(exist_sep));
    Expr sum_phase_mask = p.define("sum_phase_mask", and_(exist_sep, not_(is_sep)));

    // Position tracking for simulation, frozen once [SEP] appears.
    // adjusted: the listing writes "get_move and mask"; with min() a -1 move
    // survives a 0 mask, so the mask multiplies instead.
    Expr sim_move = p.define("sim_move", p.multiply(get_move, sim_phase_mask));
    Expr next_sim_pos = p.define("next_sim_pos", sum(sim_move));
    Expr current_sim_pos = p.define("current_sim_pos", minus(next_sim_pos, sim_move));
    // adjusted: summary tokens carry the frozen head position, which may lie
    // one past the written region; masking them to 0 is harmless because
    // cell 0 is always written by the first token.
    Expr masked_pos = p.define("masked_sim_pos", p.multiply(current_sim_pos, sim_phase_mask));
    Expr max_pos = p.define("max_pos", seq_max(masked_pos));
    Expr min_pos = p.define("min_pos", seq_min(masked_pos));
    Expr expected_sum_len = p.define(
        "expected_sum_len",
        add_const(add(minus(max_pos, min_pos), p.relu(add_const(minus(max_pos, next_sim_pos), -1))), 1));

    // SIMULATION phase
    Vec blank(na, 0);
    blank[static_cast<std::size_t>(spec.blank)] = 1;
    Expr current_symbol = p.define(
        "current_symbol", rightmost_exact_match(next_sim_pos, current_sim_pos, get_symbol, p.constant(blank)));
    // transition: table operator on onehot(Q) x onehot(A)
    Matrix table(vocab_size, Vec(nq * na, 0));
    for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t a = 0; a < na; ++a) {
            const Transition& t = spec.delta[q][a];
            table[codec.index({t.next, t.write, t.move})][q * na + a] = 1;
        }
    Expr simulation_step = p.define("simulation_step", p.linear(table, kron(get_state, current_symbol)));

    Expr end_simulation = p.define("end_simulation", geq(seq_len, scale(2, expected_sum_len)));
    Expr simulation = p.define("simulation", if_then_else(end_simulation, onehot_vocab(sep_index), simulation_step));

    // SUMMARIZATION phase
    Expr current_sum_pos = p.define("current_sum_pos", sum(p.multiply(get_move, sum_phase_mask)));
    Expr current_sum_len = p.define("current_sum_len", sum(sum_phase_mask));

    // compute_move for summary token i = current_sum_len + 1 with
    // m = max_pos - min_pos and head p = next_sim_pos
    Expr i = add_const(current_sum_len, 1);
    Expr m = minus(max_pos, min_pos);
    Expr before_turn = leq(i, m);
    Expr at_turn = equal(i, add_const(m, 1));
    Expr after_turn = greater(i, add_const(m, 1));
    Expr head_past_end = equal(next_sim_pos, add_const(max_pos, 1));
    Expr head_at_end = equal(next_sim_pos, max_pos);
    Expr move_plus = add(before_turn, p.multiply(at_turn, head_past_end));
    Expr move_zero = p.multiply(at_turn, head_at_end);
    Expr move_minus = add(after_turn, p.multiply(at_turn, not_(or_(head_past_end, head_at_end))));
    Expr next_move = p.define("next_move", p.concat({move_minus, move_zero, move_plus}));

    // adjusted: keys carry 2*sim_phase_mask so summary tokens (frozen head
    // position) never tie with a written cell
    Vec nb_proj_row(na, 0);
    Matrix nb_proj(nnb, Vec(na, 0));
    for (std::size_t a = 0; a < na; ++a)
        if (nb_index[a] >= 0) nb_proj[static_cast<std::size_t>(nb_index[a])][a] = 1;
    Expr query = p.concat({add(current_sum_pos, min_pos), p.constant(Vec{2})});
    Expr key = p.concat({current_sim_pos, scale(2, sim_phase_mask)});
    Expr summary_symbol = p.define("summary_symbol", rightmost_best_match(query, key, p.linear(nb_proj, get_symbol)));
    // adjusted: the last token may be [SEP], whose state is empty; take the
    // state of the most recent simulation token instead
    Expr sum_state = p.define("summary_state", rha(p.one(), sim_phase_mask, get_state));
    Matrix pad(vocab_size, Vec(nsig, 0));
    for (std::size_t k = 0; k < nsig; ++k) pad[k][k] = 1;
    Expr summary_step =
        p.define("summary_step", p.linear(pad, kron(kron(sum_state, summary_symbol), next_move)));

    Expr end_summary = p.define("end_summary", equal(current_sum_len, expected_sum_len));
    Expr summary = p.define("summary", if_then_else(end_summary, onehot_vocab(return_index), summary_step));

    Expr result = p.define("result", if_then_else(exist_sep, summary, simulation));
    p.set_result(result, std::move(vocab));
    return p;
}


TmCheck check_tm_program(const TMSpec& spec, const Program& program, const std::vector<std::vector<int>>& inputs,
                         std::size_t step_cap, bool check_types) {
    TmCheck r;
    TmTeacher teacher(spec);
    const TmCodec& codec = teacher.codec();
    Evaluator ev(program, check_types);
    auto fail = [&](const std::vector<int>& input, std::size_t at, const std::string& what) {
        if (r.first_failure.empty())
            r.first_failure = "input \"" + format_input(spec, input) + "\" step " + std::to_string(at) + ": " + what;
    };
    for (const auto& input : inputs) {
        ++r.runs;
        TokenSeq ctx = codec.encode(encode_input(spec, input));
        bool summarizing = false;
        std::size_t steps = 0;
        for (std::size_t at = 0;; ++at) {
            const Token expected = teacher(ctx);
            if (!ctx.empty()) {
                ++r.tokens_checked;
                try {
                    const Token got = next_token(ev, program, ctx);
                    if (got != expected) {
                        ++r.mismatches;
                        fail(input, at, "program gave " + got.surface() + ", expected " + expected.surface());
                    }
                } catch (const AmbiguousDecode& e) {
                    ++r.ambiguous;
                    fail(input, at, e.what());
                }
            }
            ctx.push_back(expected);
            if (expected == kSep) {
                summarizing = true;
            } else if (expected == kReturn) {
                ctx = reduce_simplified(ctx);
                summarizing = false;
            } else if (!summarizing) {
                ++steps;
                const UpdateToken u = *codec.decode(expected);
                if (spec.halting(u.q) || steps >= step_cap) break;
            }
        }
    }
    return r;
}

}  // namespace pencil::fasp
