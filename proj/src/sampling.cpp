#include "phonoloc/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "phonoloc/errors.hpp"

namespace phonoloc {

RealizationSource::RealizationSource(const disorder::DisorderModel& model, const SamplingPlan& plan)
    : model_(&model), seed_(plan.seed) {
    const auto support = model.support_size();
    exact_ = support && *support <= plan.enumeration_cap;
    if (exact_) {
        enumerated_ = disorder::enumerate_realizations(model, plan.enumeration_cap);
        count_ = enumerated_.size();
    } else {
        if (plan.n_samples < 1) throw InvalidArgument("at least one disorder sample is required");
        count_ = plan.n_samples;
    }
}

disorder::SpinConfig RealizationSource::at(std::size_t k) const {
    if (exact_) return enumerated_[k];
    auto c = disorder::sample_realization(*model_, seed_, k);
    c.weight = 1.0 / static_cast<double>(count_);
    return c;
}

double ScalarMoments::standard_error(bool exact) const {
    if (exact || count < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, sum_sq / weight - m * m);
    return std::sqrt(var / static_cast<double>(count - 1));
}

}  // namespace phonoloc
