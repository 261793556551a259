#include "lvp/domain_gate.hpp"

#include "lvp/errors.hpp"

namespace lvp {

LabelVectorPredicate select_domain(std::uint32_t domain_id) {
    return [domain_id](const LabelVector& lv) { return lv.domain_id == domain_id; };
}

LabelVectorPredicate select_namespace(std::string ns) {
    return [ns = std::move(ns)](const LabelVector& lv) { return lv.class_id.ns == ns; };
}

Gate build_gate(const Pool& pool, const LabelVectorPredicate& selects_branch, SimilarityKind kind,
                std::string branch_id) {
    const std::size_t d = pool.dim();
    std::vector<double> yes(d, 0.0), no(d, 0.0);
    std::size_t n_yes = 0, n_no = 0;
    for (const auto& [_, list] : pool.entries()) {
        for (const auto& lv : list) {
            const bool sel = selects_branch(lv);
            auto& acc = sel ? yes : no;
            for (std::size_t i = 0; i < d; ++i) acc[i] += static_cast<double>(lv.vector[i]);
            ++(sel ? n_yes : n_no);
        }
    }
    if (n_yes == 0) throw InvalidInput("gate predicate selects no label vectors");
    if (n_no == 0) throw InvalidInput("gate predicate selects every label vector");
    for (auto& x : yes) x /= static_cast<double>(n_yes);
    for (auto& x : no) x /= static_cast<double>(n_no);
    return Gate{std::move(yes), std::move(no), kind, std::move(branch_id)};
}

Route route(const Gate& gate, const Embedding& query) {
    const double s_yes = sim(gate.kind, gate.yes_vector, query.values());
    const double s_no = sim(gate.kind, gate.no_vector, query.values());
    return s_yes > s_no ? Route::Branch : Route::Main;
}

ClassId gated_classify(const Gate& gate, const BranchClassifier& branch, const Pool& main_pool,
                       const Embedding& query, SimilarityKind kind) {
    if (route(gate, query) == Route::Main) return classify_label(kind, main_pool, query);
    if (const auto* p = std::get_if<std::reference_wrapper<const Pool>>(&branch))
        return classify_label(kind, p->get(), query);
    return predict(std::get<std::reference_wrapper<const LinearClassifier>>(branch).get(), query);
}

}  // namespace lvp
