#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pel/io.hpp"

namespace {

using namespace pel;

std::string format_probability(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", p);
    return buf;
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) {
        const char* severity = d.severity == Diagnostic::Severity::error ? "error" : "warning";
        std::cout << severity << " [" << d.code << "] " << d.message << "\n";
    }
}

Evidence parse_evidence(const Network& net, const std::vector<std::string>& pairs) {
    Evidence evidence;
    for (const auto& text : pairs) {
        auto eq = text.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::syntax_error, "--evidence expects VAR=VALUE, got '" + text + "'");
        VarId var = net.require(text.substr(0, eq));
        evidence.set(var, net.value_index(var, text.substr(eq + 1)));
    }
    return evidence;
}

/// Loads any document as a queryable PEL model; influence diagrams are
/// solved and converted on demand.
PelModel load_queryable(const std::string& path, PelModel::Options options, bool verbose) {
    LoadedModel loaded = load_model(path, options);
    if (loaded.pel) return std::move(*loaded.pel);

    std::vector<std::string> added;
    InfluenceDiagram completed = loaded.id->completed_no_forgetting(&added);
    if (verbose)
        for (const auto& arc : added)
            std::cerr << "warning: added no-forgetting arc " << arc << "\n";
    Policy policy = solve_id(completed);
    return assemble_pel_model(completed, policy, loaded.agent_stage_names, loaded.decider,
                              options);
}

int cmd_validate(const std::string& path) {
    std::vector<Diagnostic> diags = validate_document(read_document(path));
    print_diagnostics(diags);
    if (has_errors(diags)) return 1;
    std::cout << "OK\n";
    return 0;
}

int cmd_query(const std::string& path, const std::string& formula_text,
              const std::vector<std::string>& evidence_pairs, bool oracle, bool check,
              bool explain, PelModel::Options options) {
    PelModel model = load_queryable(path, options, true);
    Formula formula = parse_formula(formula_text);
    Evidence evidence = parse_evidence(model.network(), evidence_pairs);

    if (explain) {
        for (const auto& [belief, relevant] : model.explain(formula)) {
            std::cout << "Rel(" << belief << ") = {";
            for (std::size_t i = 0; i < relevant.size(); ++i)
                std::cout << (i ? ", " : "") << relevant[i];
            std::cout << "}\n";
        }
        for (const auto& [key, id] : model.indicators()) {
            std::cout << "node eta[" << key << "] <-";
            for (VarId p : model.network().parents(id))
                std::cout << ' ' << model.network().variable(p).name;
            std::cout << "\n";
        }
    }

    if (check) {
        double fast = model.query_formula(formula, evidence);
        double reference = model.formula_probability_oracle(formula, evidence);
        std::cout << "fast   " << format_probability(fast) << "\n";
        std::cout << "oracle " << format_probability(reference) << "\n";
        if (std::abs(fast - reference) > 1e-9) {
            std::cerr << "error: fast and oracle paths disagree\n";
            return 1;
        }
        return 0;
    }
    double p = oracle ? model.formula_probability_oracle(formula, evidence)
                      : model.query_formula(formula, evidence);
    std::cout << format_probability(p) << "\n";
    return 0;
}

int cmd_assert_query(const std::string& path, const std::string& assert_text,
                     const std::string& query_text,
                     const std::vector<std::string>& evidence_pairs, PelModel::Options options) {
    PelModel model = load_queryable(path, options, true);
    Evidence evidence = model.assert_formula(parse_formula(assert_text));
    evidence.merge(parse_evidence(model.network(), evidence_pairs));
    std::cout << format_probability(model.query_formula(parse_formula(query_text), evidence))
              << "\n";
    return 0;
}

int cmd_solve(const std::string& path, const std::string& export_path,
              PelModel::Options options) {
    LoadedModel loaded = load_model(path, options);
    if (!loaded.id) throw Error(ErrorCode::schema_error, "'" + path + "' has no decisions");

    std::vector<std::string> added;
    InfluenceDiagram completed = loaded.id->completed_no_forgetting(&added);
    for (const auto& arc : added) std::cout << "warning: added no-forgetting arc " << arc << "\n";

    Policy policy = solve_id(completed);
    for (const auto& rule : policy.rules) {
        int decision = completed.require(rule.decision);
        const auto& dnode = completed.node(decision);
        std::cout << "decision " << rule.decision << ":\n";
        std::vector<int> sizes;
        for (const auto& p : rule.parents)
            sizes.push_back(static_cast<int>(completed.node(completed.require(p)).domain.size()));
        for (std::size_t row = 0; row < rule.actions.size(); ++row) {
            std::vector<int> values = parent_row_instantiation(sizes, row);
            std::cout << "  ";
            if (rule.parents.empty()) std::cout << "(always)";
            for (std::size_t i = 0; i < rule.parents.size(); ++i) {
                const auto& pnode = completed.node(completed.require(rule.parents[i]));
                std::cout << (i ? ", " : "") << pnode.name << "="
                          << pnode.domain[static_cast<std::size_t>(values[i])];
            }
            std::cout << " -> " << dnode.domain[static_cast<std::size_t>(rule.actions[row])]
                      << "\n";
        }
    }
    std::cout << "meu = " << format_probability(policy.meu) << "\n";

    if (!export_path.empty()) {
        PelModel model = assemble_pel_model(completed, policy, loaded.agent_stage_names,
                                            loaded.decider, options);
        ModelDocument doc = document_from_model(
            model, "Derived from '" + path + "' by solving the decision problem.");
        write_document(doc, export_path);
        std::cout << "wrote " << export_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Belief and decision queries over discrete Bayesian networks"};
    app.require_subcommand(1);

    std::string path, formula_text, assert_text, query_text, export_path;
    std::vector<std::string> evidence_pairs;
    bool oracle = false, check = false, explain = false;
    std::size_t max_states = kDefaultStateCap;

    CLI::App* validate = app.add_subcommand("validate", "Check a model file");
    validate->add_option("path", path, "model file")->required();

    CLI::App* query = app.add_subcommand("query", "Probability of a formula");
    query->add_option("path", path, "model file")->required();
    query->add_option("formula", formula_text, "formula text")->required();
    query->add_option("--evidence", evidence_pairs, "VAR=VALUE evidence (repeatable)");
    query->add_flag("--oracle", oracle, "answer with the brute-force semantics");
    query->add_flag("--check", check, "run both paths and require agreement");
    query->add_flag("--explain", explain, "print relevant observations per belief operator");
    query->add_option("--max-states", max_states, "state cap for enumeration");

    CLI::App* assert_query = app.add_subcommand("assert-query", "Condition on one formula, query another");
    assert_query->add_option("path", path, "model file")->required();
    assert_query->add_option("assert", assert_text, "formula to assert")->required();
    assert_query->add_option("query", query_text, "formula to query")->required();
    assert_query->add_option("--evidence", evidence_pairs, "VAR=VALUE evidence (repeatable)");
    assert_query->add_option("--max-states", max_states, "state cap for enumeration");

    CLI::App* solve = app.add_subcommand("solve", "Solve an influence diagram");
    solve->add_option("path", path, "influence diagram file")->required();
    solve->add_option("--export-bn", export_path, "write the converted network here");
    solve->add_option("--max-states", max_states, "state cap for enumeration");

    CLI11_PARSE(app, argc, argv);

    PelModel::Options options;
    options.state_cap = max_states;

    try {
        if (validate->parsed()) return cmd_validate(path);
        if (query->parsed())
            return cmd_query(path, formula_text, evidence_pairs, oracle, check, explain, options);
        if (assert_query->parsed())
            return cmd_assert_query(path, assert_text, query_text, evidence_pairs, options);
        if (solve->parsed()) return cmd_solve(path, export_path, options);
    } catch (const pel::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
