#pragma once

#include <memory>

#include "fbk/gateway/gateway.hpp"
#include "fbk/gateway/http_backend.hpp"
#include "fbk/gateway/mock.hpp"

namespace fbk::gateway {

inline std::shared_ptr<Backend> make_backend(const BackendProfile& p) {
    if (p.kind == "mock") return std::make_shared<MockBackend>(MockScript::load(p.mock_script));
    return std::make_shared<HttpBackend>(p);
}

inline std::shared_ptr<Gateway> make_gateway(const BackendProfile& p) {
    std::shared_ptr<AuditLog> audit;
    if (!p.audit_log.empty()) audit = std::make_shared<AuditLog>(p.audit_log);
    return std::make_shared<Gateway>(p, make_backend(p), std::move(audit));
}

inline std::shared_ptr<Gateway> load_gateway(const std::filesystem::path& profile_path) {
    return make_gateway(load_profile(profile_path));
}

}  // namespace fbk::gateway
