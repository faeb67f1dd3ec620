#include "tthf/vector.hpp"

namespace tthf {

ModelVector mean_of(const std::vector<ModelVector>& vs) {
    ModelVector m(vs.empty() ? 0 : vs[0].dim());
    for (const auto& v : vs) m.add_scaled(1.0, v);
    if (!vs.empty()) m.scale(1.0 / static_cast<double>(vs.size()));
    return m;
}

}  // namespace tthf
