#include "effagents/session.hpp"

namespace effagents {

LlmSession::LlmSession(ChatBackend& backend, const PricingTable& pricing, RunLedger& ledger, TraceSink* trace,
                       std::string run_id, std::string task_id)
    : backend_(backend),
      pricing_(pricing),
      ledger_(ledger),
      trace_(trace),
      run_id_(std::move(run_id)),
      task_id_(std::move(task_id)) {}

void LlmSession::check_deadline() const {
    if (deadline_ && std::chrono::steady_clock::now() > *deadline_) throw RunTimeout();
}

void LlmSession::emit(json event) const {
    if (trace_) trace_->emit(std::move(event));
}

ChatResponse LlmSession::complete(ChatRequest request, int step_index) {
    check_deadline();
    request.run_id = run_id_;
    request.task_id = task_id_;
    const auto& pricing = pricing_.at(request.model_id);
    const int seq = seq_++;
    emit({{"type", "request"}, {"seq", seq}, {"step", step_index}, {"request", to_json(request)}});
    try {
        validate_request(request);
        auto response = backend_.complete(request);
        emit({{"type", "response"}, {"seq", seq}, {"response", to_json(response)}});
        const auto& entry = ledger_.record(step_index, request.purpose, request.model_id, response.usage, pricing);
        emit({{"type", "ledger"}, {"entry", to_json(entry)}});
        return response;
    } catch (const BackendError& e) {
        emit({{"type", "call_error"}, {"seq", seq}, {"kind", to_string(e.kind())}, {"message", e.detail()}});
        const auto& entry = ledger_.record_failure(step_index, request.purpose, request.model_id, e.what());
        emit({{"type", "ledger"}, {"entry", to_json(entry)}});
        throw;
    }
}

}  // namespace effagents
