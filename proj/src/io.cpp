#include "pel/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pel {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::schema_error, "field '" + field + "': " + why);
}

const json& expect(const json& obj, const std::string& field, const char* type_name,
                   bool (json::*checker)() const) {
    auto it = obj.find(field);
    if (it == obj.end()) schema_fail(field, "missing");
    if (!((*it).*checker)()) schema_fail(field, std::string("expected ") + type_name);
    return *it;
}

const json& expect_array(const json& obj, const std::string& field) {
    return expect(obj, field, "an array", &json::is_array);
}

std::string expect_string(const json& obj, const std::string& field) {
    return expect(obj, field, "a string", &json::is_string).get<std::string>();
}

std::vector<std::string> string_list(const json& arr, const std::string& field) {
    if (!arr.is_array()) schema_fail(field, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) schema_fail(field, "expected an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::vector<double> number_list(const json& arr, const std::string& field) {
    if (!arr.is_array()) schema_fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : arr) {
        if (!v.is_number()) schema_fail(field, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::vector<double>> number_rows(const json& arr, const std::string& field) {
    if (!arr.is_array()) schema_fail(field, "expected an array of rows");
    std::vector<std::vector<double>> out;
    for (const auto& row : arr) out.push_back(number_list(row, field));
    return out;
}

}  // namespace

ModelDocument parse_document(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports a byte offset; convert to line/column.
        std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ", column " +
                                                std::to_string(column) + ": invalid JSON");
    }
    if (!root.is_object()) schema_fail("$", "expected a JSON object");

    ModelDocument doc;
    doc.version = expect_string(root, "version");
    if (doc.version != "pel-1")
        schema_fail("version", "unsupported schema version '" + doc.version + "'");

    for (const auto& v : expect_array(root, "variables")) {
        if (!v.is_object()) schema_fail("variables", "expected objects");
        doc.variables.push_back(
            {expect_string(v, "name"), string_list(expect_array(v, "domain"), "domain")});
    }
    for (const auto& c : expect_array(root, "cpds")) {
        if (!c.is_object()) schema_fail("cpds", "expected objects");
        doc.cpds.push_back({expect_string(c, "child"),
                            string_list(expect_array(c, "parents"), "parents"),
                            number_rows(expect_array(c, "rows"), "rows")});
    }
    if (root.contains("agents")) {
        for (const auto& a : expect_array(root, "agents")) {
            if (!a.is_object()) schema_fail("agents", "expected objects");
            ModelDocument::AgentDecl decl;
            decl.name = expect_string(a, "name");
            for (const auto& stage : expect_array(a, "stages"))
                decl.stages.push_back(string_list(stage, "stages"));
            doc.agents.push_back(std::move(decl));
        }
    }
    if (root.contains("decisions")) {
        for (const auto& d : expect_array(root, "decisions")) {
            if (!d.is_object()) schema_fail("decisions", "expected objects");
            doc.decisions.push_back({expect_string(d, "name"),
                                     string_list(expect_array(d, "domain"), "domain"),
                                     string_list(expect_array(d, "parents"), "parents")});
        }
    }
    if (root.contains("utilities")) {
        for (const auto& u : expect_array(root, "utilities")) {
            if (!u.is_object()) schema_fail("utilities", "expected objects");
            doc.utilities.push_back({expect_string(u, "name"),
                                     string_list(expect_array(u, "parents"), "parents"),
                                     number_list(expect_array(u, "table"), "table")});
        }
    }
    if (root.contains("observation_uncertainty")) {
        for (const auto& o : expect_array(root, "observation_uncertainty")) {
            if (!o.is_object()) schema_fail("observation_uncertainty", "expected objects");
            ModelDocument::ObservationUncertaintyDecl decl;
            decl.agent = expect_string(o, "agent");
            const json& stage = expect(o, "stage", "an integer", &json::is_number_integer);
            decl.stage = stage.get<int>();
            decl.variable = expect_string(o, "variable");
            decl.parents = string_list(expect_array(o, "parents"), "parents");
            decl.rows = number_rows(expect_array(o, "rows"), "rows");
            doc.observation_uncertainty.push_back(std::move(decl));
        }
    }
    if (root.contains("preference_nodes")) {
        for (const auto& p : expect_array(root, "preference_nodes")) {
            if (!p.is_object()) schema_fail("preference_nodes", "expected objects");
            ModelDocument::PreferenceDecl decl;
            decl.name = expect_string(p, "name");
            decl.domain = string_list(expect_array(p, "domain"), "domain");
            decl.prior = number_list(expect_array(p, "prior"), "prior");
            decl.utilities = string_list(expect_array(p, "utilities"), "utilities");
            decl.tables = number_rows(expect_array(p, "tables"), "tables");
            if (decl.tables.size() != decl.utilities.size())
                schema_fail("preference_nodes", "need one replacement table per listed utility");
            doc.preference_nodes.push_back(std::move(decl));
        }
    }
    if (root.contains("decider")) doc.decider = expect_string(root, "decider");
    if (root.contains("notes")) doc.notes = expect_string(root, "notes");

    if (doc.decisions.empty()) {
        if (!doc.preference_nodes.empty())
            schema_fail("preference_nodes", "only valid together with decisions");
        if (!doc.decider.empty()) schema_fail("decider", "only valid together with decisions");
    }
    return doc;
}

ModelDocument read_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::io_error, "cannot read '" + path + "'");
    return parse_document(buffer.str());
}

std::string document_to_text(const ModelDocument& doc) {
    json root;
    root["version"] = doc.version;
    root["variables"] = json::array();
    for (const auto& v : doc.variables)
        root["variables"].push_back({{"name", v.name}, {"domain", v.domain}});
    root["cpds"] = json::array();
    for (const auto& c : doc.cpds)
        root["cpds"].push_back({{"child", c.child}, {"parents", c.parents}, {"rows", c.rows}});
    if (!doc.agents.empty()) {
        root["agents"] = json::array();
        for (const auto& a : doc.agents)
            root["agents"].push_back({{"name", a.name}, {"stages", a.stages}});
    }
    if (!doc.decisions.empty()) {
        root["decisions"] = json::array();
        for (const auto& d : doc.decisions)
            root["decisions"].push_back(
                {{"name", d.name}, {"domain", d.domain}, {"parents", d.parents}});
    }
    if (!doc.utilities.empty()) {
        root["utilities"] = json::array();
        for (const auto& u : doc.utilities)
            root["utilities"].push_back(
                {{"name", u.name}, {"parents", u.parents}, {"table", u.table}});
    }
    if (!doc.observation_uncertainty.empty()) {
        root["observation_uncertainty"] = json::array();
        for (const auto& o : doc.observation_uncertainty)
            root["observation_uncertainty"].push_back({{"agent", o.agent},
                                                       {"stage", o.stage},
                                                       {"variable", o.variable},
                                                       {"parents", o.parents},
                                                       {"rows", o.rows}});
    }
    if (!doc.preference_nodes.empty()) {
        root["preference_nodes"] = json::array();
        for (const auto& p : doc.preference_nodes)
            root["preference_nodes"].push_back({{"name", p.name},
                                                {"domain", p.domain},
                                                {"prior", p.prior},
                                                {"utilities", p.utilities},
                                                {"tables", p.tables}});
    }
    if (!doc.decider.empty()) root["decider"] = doc.decider;
    if (!doc.notes.empty()) root["notes"] = doc.notes;
    return root.dump(2) + "\n";
}

void write_document(const ModelDocument& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    out << document_to_text(doc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
}

namespace {

/// Builds the in-memory objects without running the final validators.
LoadedModel build_model(const ModelDocument& doc, PelModel::Options options) {
    LoadedModel loaded;
    if (doc.decisions.empty()) {
        Network net;
        for (const auto& v : doc.variables) net.add_variable(v.name, v.domain);
        for (const auto& c : doc.cpds) {
            std::vector<VarId> parents;
            for (const auto& p : c.parents) parents.push_back(net.require(p));
            net.set_cpd(net.require(c.child), parents, c.rows);
        }
        ObservationSchedule schedule;
        for (const auto& a : doc.agents) {
            std::vector<std::set<VarId>> stages;
            for (const auto& stage : a.stages) {
                std::set<VarId> vars;
                for (const auto& name : stage) vars.insert(net.require(name));
                stages.push_back(std::move(vars));
            }
            schedule.set_agent(a.name, std::move(stages));
        }
        PelModel model(std::move(net), std::move(schedule), options);
        for (const auto& o : doc.observation_uncertainty) {
            std::vector<VarId> parents;
            for (const auto& p : o.parents) parents.push_back(model.network().require(p));
            model.add_observation_uncertainty(o.agent, o.stage,
                                              model.network().require(o.variable), parents,
                                              o.rows);
        }
        loaded.pel.emplace(std::move(model));
        return loaded;
    }

    InfluenceDiagram id;
    for (const auto& v : doc.variables) id.add_chance(v.name, v.domain);
    for (const auto& d : doc.decisions) id.add_decision(d.name, d.domain, d.parents);
    for (const auto& c : doc.cpds) id.set_cpd(c.child, c.parents, c.rows);
    for (const auto& u : doc.utilities) id.add_utility(u.name, u.parents, u.table);
    for (const auto& p : doc.preference_nodes) {
        id.add_preference_node(p.name, p.domain, p.prior, p.utilities);
        for (std::size_t i = 0; i < p.utilities.size(); ++i) {
            // Re-supply the affected utility's table, now including the
            // preference node as its last parent.
            for (const auto& u : id.utilities()) {
                if (u.name != p.utilities[i]) continue;
                std::vector<std::string> parent_names;
                for (int parent : u.parents) parent_names.push_back(id.node(parent).name);
                id.set_utility(u.name, parent_names, p.tables[i]);
                break;
            }
        }
    }
    if (!doc.observation_uncertainty.empty())
        throw Error(ErrorCode::schema_error,
                    "observation_uncertainty applies to PEL documents; model observation "
                    "uncertainty in an influence diagram with explicit chance nodes");
    for (const auto& a : doc.agents) {
        if (a.name == doc.decider)
            throw Error(ErrorCode::schema_error,
                        "decider '" + doc.decider + "' must not appear in agents; its stages "
                        "are the decision parent sets");
        loaded.agent_stage_names[a.name] = a.stages;
    }
    loaded.decider = doc.decider;
    loaded.id.emplace(std::move(id));
    return loaded;
}

}  // namespace

LoadedModel instantiate(const ModelDocument& doc, PelModel::Options options) {
    LoadedModel loaded = build_model(doc, options);
    auto diags = loaded.pel ? loaded.pel->validate() : loaded.id->validate();
    for (const auto& d : diags)
        if (d.severity == Diagnostic::Severity::error)
            throw Error(ErrorCode::validation_failed, d.message);
    return loaded;
}

std::vector<Diagnostic> validate_document(const ModelDocument& doc) {
    try {
        LoadedModel loaded = build_model(doc, {});
        return loaded.pel ? loaded.pel->validate() : loaded.id->validate();
    } catch (const Error& e) {
        return {{Diagnostic::Severity::error, to_string(e.code()), e.what()}};
    }
}

LoadedModel load_model(const std::string& path, PelModel::Options options) {
    return instantiate(read_document(path), options);
}

ModelDocument document_from_model(const PelModel& model, const std::string& notes) {
    ModelDocument doc;
    const Network& net = model.network();
    for (const auto& var : net.variables()) {
        doc.variables.push_back({var.name, var.domain});
        const Cpd& cpd = net.cpd(var.id);
        ModelDocument::CpdDecl decl;
        decl.child = var.name;
        for (VarId p : cpd.parents) decl.parents.push_back(net.variable(p).name);
        decl.rows = cpd.table;
        doc.cpds.push_back(std::move(decl));
    }
    for (const auto& [agent, stages] : model.schedule().agents()) {
        ModelDocument::AgentDecl decl;
        decl.name = agent;
        for (const auto& stage : stages) {
            std::vector<std::string> names;
            for (VarId v : stage) names.push_back(net.variable(v).name);
            decl.stages.push_back(std::move(names));
        }
        doc.agents.push_back(std::move(decl));
    }
    doc.notes = notes;
    return doc;
}

PelModel assemble_pel_model(
    const InfluenceDiagram& raw, const Policy& policy,
    const std::map<std::string, std::vector<std::vector<std::string>>>& agent_stage_names,
    const std::string& decider, PelModel::Options options) {
    InfluenceDiagram id = raw.completed_no_forgetting();
    Network net = id_to_bn(id, policy);

    ObservationSchedule schedule;
    for (const auto& [agent, stages] : agent_stage_names) {
        std::vector<std::set<VarId>> resolved;
        for (const auto& stage : stages) {
            std::set<VarId> vars;
            for (const auto& name : stage) vars.insert(net.require(name));
            resolved.push_back(std::move(vars));
        }
        schedule.set_agent(agent, std::move(resolved));
    }
    if (!decider.empty()) {
        // One stage per decision; the information available at decision k is
        // exactly the completed parent set of D_k.
        std::vector<std::set<VarId>> stages;
        for (int d : id.decision_order()) {
            std::set<VarId> vars;
            for (int p : id.node(d).parents) vars.insert(net.require(id.node(p).name));
            stages.push_back(std::move(vars));
        }
        schedule.set_agent(decider, std::move(stages));
    }
    return PelModel(std::move(net), std::move(schedule), options);
}

}  // namespace pel
