#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pel/decision.hpp"
#include "pel/pel_model.hpp"
#include "pel/types.hpp"

namespace pel {

/// On-disk model description, schema version "pel-1": a UTF-8 JSON document
/// (conventional extension .pel.json). A document with a `decisions` section
/// loads as an influence diagram, otherwise as a PEL model.
struct ModelDocument {
    struct VariableDecl {
        std::string name;
        std::vector<std::string> domain;
    };
    struct CpdDecl {
        std::string child;
        std::vector<std::string> parents;
        std::vector<std::vector<double>> rows;
    };
    struct AgentDecl {
        std::string name;
        std::vector<std::vector<std::string>> stages;  // per-stage observed variable names
    };
    struct DecisionDecl {
        std::string name;
        std::vector<std::string> domain;
        std::vector<std::string> parents;
    };
    struct UtilityDecl {
        std::string name;
        std::vector<std::string> parents;
        std::vector<double> table;
    };
    struct ObservationUncertaintyDecl {
        std::string agent;
        int stage = 1;
        std::string variable;
        std::vector<std::string> parents;
        std::vector<std::vector<double>> rows;
    };
    struct PreferenceDecl {
        std::string name;
        std::vector<std::string> domain;
        std::vector<double> prior;
        std::vector<std::string> utilities;
        // Replacement tables for the affected utilities, in the same order;
        // sized for the utility's parents with the preference node appended.
        std::vector<std::vector<double>> tables;
    };

    std::string version = "pel-1";
    std::vector<VariableDecl> variables;
    std::vector<CpdDecl> cpds;
    std::vector<AgentDecl> agents;
    std::vector<DecisionDecl> decisions;
    std::vector<UtilityDecl> utilities;
    std::vector<ObservationUncertaintyDecl> observation_uncertainty;
    std::vector<PreferenceDecl> preference_nodes;
    std::string decider;  // influence diagrams: agent whose stages are the decision parents
    std::string notes;
};

/// Instantiated document: exactly one of `pel` / `id` is set.
struct LoadedModel {
    std::optional<PelModel> pel;
    std::optional<InfluenceDiagram> id;
    // Influence diagrams carry their observation schedules by name; they
    // resolve against the converted network (see assemble_pel_model).
    std::map<std::string, std::vector<std::vector<std::string>>> agent_stage_names;
    std::string decider;
};

/// Reads and schema-checks a document. Throws io-error, parse-error (with
/// line/column), or schema-error naming the field.
ModelDocument read_document(const std::string& path);
void write_document(const ModelDocument& doc, const std::string& path);

ModelDocument parse_document(const std::string& text);
std::string document_to_text(const ModelDocument& doc);

/// Builds the in-memory objects; throws on the first validation error.
LoadedModel instantiate(const ModelDocument& doc, PelModel::Options options = {});

/// Non-throwing validation: schema plus the object validators' diagnostics.
std::vector<Diagnostic> validate_document(const ModelDocument& doc);

/// read_document + instantiate.
LoadedModel load_model(const std::string& path, PelModel::Options options = {});

/// Serializes a PEL model back to a document (indicator and helper nodes are
/// written as ordinary variables).
ModelDocument document_from_model(const PelModel& model, const std::string& notes = "");

/// PEL model over the solved diagram's network: the decider's stages are the
/// completed decision parent sets; other agents' stages are given by name.
PelModel assemble_pel_model(
    const InfluenceDiagram& id, const Policy& policy,
    const std::map<std::string, std::vector<std::vector<std::string>>>& agent_stage_names,
    const std::string& decider, PelModel::Options options = {});

}  // namespace pel
