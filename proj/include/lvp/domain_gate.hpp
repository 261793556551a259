#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "lvp/core_types.hpp"
#include "lvp/linear_head.hpp"
#include "lvp/similarity.hpp"

namespace lvp {

// Binary router: a query goes to the branch when it is strictly closer to the
// mean of the branch's label vectors than to the mean of all the others.
struct Gate {
    std::vector<double> yes_vector;
    std::vector<double> no_vector;
    SimilarityKind kind = SimilarityKind::L1;
    std::string branch_id;
};

using LabelVectorPredicate = std::function<bool(const LabelVector&)>;

LabelVectorPredicate select_domain(std::uint32_t domain_id);
LabelVectorPredicate select_namespace(std::string ns);

// Unweighted 64-bit means of the selected and unselected label vectors.
// Throws InvalidInput when either side is empty.
Gate build_gate(const Pool& pool, const LabelVectorPredicate& selects_branch, SimilarityKind kind,
                std::string branch_id = "branch");

enum class Route { Branch, Main };

Route route(const Gate& gate, const Embedding& query);

using BranchClassifier =
    std::variant<std::reference_wrapper<const Pool>, std::reference_wrapper<const LinearClassifier>>;

// Routes, then classifies with the branch (pool search or head) or with the
// main pool. Pool search in either branch uses `kind`.
ClassId gated_classify(const Gate& gate, const BranchClassifier& branch, const Pool& main_pool,
                       const Embedding& query, SimilarityKind kind);

}  // namespace lvp
