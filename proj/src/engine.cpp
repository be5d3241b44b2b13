#include "ntnsim/engine.hpp"

#include <cstdio>

namespace ntnsim {

void EventTrace::record(TimeUs t, std::string_view kind, std::string_view entity,
                        std::string_view detail) {
    char head[32];
    int n = std::snprintf(head, sizeof head, "%lld,", static_cast<long long>(t));
    auto feed = [this](const char* p, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            hash_ ^= static_cast<unsigned char>(p[i]);
            hash_ *= 1099511628211ULL;
        }
    };
    feed(head, static_cast<std::size_t>(n));
    feed(kind.data(), kind.size());
    feed(",", 1);
    feed(entity.data(), entity.size());
    feed(",", 1);
    feed(detail.data(), detail.size());
    feed("\n", 1);
    if (keep_lines_) {
        text_.append(head, static_cast<std::size_t>(n));
        text_.append(kind);
        text_.push_back(',');
        text_.append(entity);
        text_.push_back(',');
        text_.append(detail);
        text_.push_back('\n');
    }
}

} // namespace ntnsim
