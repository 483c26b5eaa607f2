#include "hon/gateway.hpp"

#include <spdlog/spdlog.h>

#include <random>
#include <thread>

#include "hon/error.hpp"

namespace hon {

namespace {

std::string participant_id(ConnectionId c) { return "c" + std::to_string(c); }

std::optional<ConnectionId> connection_of(const std::string& participant) {
    if (participant.size() < 2 || participant[0] != 'c') return std::nullopt;
    return std::stoull(participant.substr(1));
}

std::string session_name(std::uint64_t n) {
    std::string digits = std::to_string(n);
    if (digits.size() < 10) digits.insert(0, 10 - digits.size(), '0');
    return "s" + digits;
}

bool acceptable_token(const std::string& t) {
    if (t.empty() || t.size() > 64) return false;
    for (char c : t)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    return true;
}

frame::Error wire(const std::string& code, const std::string& message) { return frame::Error{code, message}; }

}  // namespace

GatewayCore::GatewayCore(PlatformConfig config, std::shared_ptr<RecordStore> store, Options options)
    : config_(std::move(config)), store_(std::move(store)), options_(options), rng_(options.seed) {
    config_.validate();
    if (!store_) throw InvalidConfig("gateway needs a record store");
    moderation_ = std::make_shared<LocalModeration>(config_.moderation);
    toolkit_.delay = config_.bot_delay;
    toolkit_.policy = config_.behavior;
    toolkit_.moderation = moderation_;
    toolkit_.charset = config_.session.allowed_charset;
    toolkit_.max_chars = config_.session.max_message_chars;
    next_session_ = store_->next_session_number();
}

GatewayCore::~GatewayCore() = default;

std::string GatewayCore::issue_token() {
    static const char* hex = "0123456789abcdef";
    std::uint64_t parts[2];
    if (options_.random_tokens) {
        std::random_device rd;
        for (auto& p : parts) p = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    } else {
        for (auto& p : parts) p = rng_.next_u64();
    }
    std::string out = "t";
    for (auto p : parts)
        for (int i = 60; i >= 0; i -= 4) out += hex[(p >> i) & 15];
    return out;
}

std::vector<Outbound> GatewayCore::connect(ConnectionId id, double) {
    bindings_[id] = Binding{};
    return {};
}

std::vector<Outbound> GatewayCore::disconnect(ConnectionId id, double now) {
    std::vector<Outbound> out;
    auto it = bindings_.find(id);
    if (it == bindings_.end()) return out;
    const Binding b = it->second;
    bindings_.erase(it);
    if (b.queued) queue_.remove(participant_id(id));
    if (b.session) {
        if (auto s = sessions_.find(*b.session); s != sessions_.end()) {
            Live& live = *s->second;
            for (Slot slot : {Slot::A, Slot::B}) {
                if (live.conn[index_of(slot)] != id) continue;
                live.conn[index_of(slot)].reset();
                if (live.game.phase().kind == PhaseKind::Chatting) {
                    const Seconds at = std::max(chat_clock(live, now), live.game.clock());
                    on_notifications(live, live.game.apply(event::AbruptExit{slot, at}), now, out);
                }
            }
        }
    }
    reap();
    return out;
}

std::vector<Outbound> GatewayCore::handle_text(ConnectionId id, std::string_view text, double now) {
    try {
        return handle(id, decode_frame(text), now);
    } catch (const FrameError& e) {
        return {{id, wire(e.code(), e.what())}};
    }
}

std::vector<Outbound> GatewayCore::handle(ConnectionId id, const Frame& f, double now) {
    std::vector<Outbound> out;
    Binding& b = bindings_[id];
    if (!is_client_frame(f)) {
        out.push_back({id, wire(wire_error::UnexpectedFrame,
                                std::string(frame_type(f)) + " is sent by the server, not by clients")});
        return out;
    }

    if (const auto* join = std::get_if<frame::Join>(&f)) {
        if (b.queued) {
            out.push_back({id, wire(wire_error::AlreadyQueued, "already waiting for a match")});
        } else if (b.session) {
            out.push_back({id, wire(wire_error::AlreadyInSession, "finish the current game first")});
        } else {
            b.token = join->token && acceptable_token(*join->token) ? *join->token
                      : !b.token.empty()                           ? b.token
                                                                   : issue_token();
            queue_.enqueue({participant_id(id), now, std::nullopt});
            b.queued = true;
            out.push_back({id, frame::Queued{b.token}});
        }
        return out;
    }

    if (!b.session) {
        out.push_back({id, wire(wire_error::NotInSession, "not in a game")});
        return out;
    }
    Live& s = *sessions_.at(*b.session);
    const Slot slot = s.conn[0] == id ? Slot::A : Slot::B;

    if (const auto* send = std::get_if<frame::SendText>(&f)) {
        const Seconds c = chat_clock(s, now);
        if (auto why = s.game.validate_message(slot, send->text, c)) {
            out.push_back({id, wire(error_code(*why), std::string("message rejected: ") + std::string(to_string(*why)))});
            return out;
        }
        const auto verdict = moderation_->screen(send->text);
        if (enforce(Origin::HumanMessage, verdict).kind == ModerationAction::Kind::EndSession) {
            on_notifications(s, s.game.apply(event::ModerationStop{slot, c}), now, out);
        } else {
            if (s.bot) s.bot->last_partner_verdict = verdict;
            on_notifications(s, s.game.apply(event::MessageSent{{slot, send->text, c}}), now, out);
        }
    } else if (const auto* guess = std::get_if<frame::SubmitGuess>(&f)) {
        try {
            on_notifications(s, s.game.record_guess({slot, guess->verdict}), now, out);
        } catch (const DuplicateGuess& e) {
            out.push_back({id, wire(wire_error::DuplicateGuess, e.what())});
        } catch (const WrongPhase& e) {
            out.push_back({id, wire(wire_error::WrongPhase, e.what())});
        }
    }
    reap();
    return out;
}

std::vector<Outbound> GatewayCore::tick(double now) {
    std::vector<Outbound> out;
    for (const auto& d : match_tick(queue_, config_.match, rng_, now)) start_session(d, now, out);
    for (auto& [id, ptr] : sessions_) {
        Live& s = *ptr;
        if (s.done) continue;
        drive_bot(s, now, out);
        if (s.done) continue;
        const Seconds c = chat_clock(s, now);
        if (c >= s.game.clock()) on_notifications(s, s.game.apply(event::ClockTick{c}), now, out);
        if (!s.done) sync_timers(s, now, out);
    }
    reap();
    return out;
}

void GatewayCore::reap() {
    for (auto it = sessions_.begin(); it != sessions_.end();)
        it = it->second->done ? sessions_.erase(it) : std::next(it);
}

void GatewayCore::start_session(const MatchDecision& d, double now, std::vector<Outbound>& out) {
    // Slots are shuffled so a player's slot says nothing about the partner.
    const bool swap = rng_.bernoulli(0.5);
    Participant a, b;
    std::optional<std::uint64_t> persona_seed;
    if (const auto* hh = std::get_if<HumanHuman>(&d.pairing)) {
        a = {swap ? hh->second : hh->first, Kind::Human, Slot::A};
        b = {swap ? hh->first : hh->second, Kind::Human, Slot::B};
    } else {
        const auto& hb = std::get<HumanBot>(d.pairing);
        Participant human{hb.human, Kind::Human, Slot::A};
        Participant bot{"bot", Kind::Bot, Slot::B};
        a = swap ? bot : human;
        b = swap ? human : bot;
        persona_seed = hb.persona_seed;
    }

    auto live = std::make_unique<Live>(Live{session_name(next_session_++),
                                            GameSession::create(config_.session, a, b, d.opener), now, {}, {}, {},
                                            now, false});
    Live& s = *live;
    for (Slot slot : {Slot::A, Slot::B}) {
        const auto& p = s.game.participant(slot);
        if (p.kind == Kind::Bot) {
            auto built = config_.bots.build(*persona_seed, d.starters[index_of(slot)], now);
            s.bot = BotSeat{slot, std::move(built), Rng(*persona_seed ^ 0x5DEECE66DULL), {}, std::nullopt};
            continue;
        }
        const auto conn = connection_of(p.id);
        s.conn[index_of(slot)] = conn;
        auto& binding = bindings_[*conn];
        binding.queued = false;
        binding.session = s.id;
        s.tokens[index_of(slot)] = binding.token;
        out.push_back({*conn, frame::Matched{slot, d.starters[index_of(slot)], s.id}});
    }
    sync_timers(s, now, out, true);
    if (s.bot && s.game.phase().current_turn == s.bot->slot) start_bot_turn(s, 0.0);
    sessions_.emplace(s.id, std::move(live));
}

void GatewayCore::start_bot_turn(Live& s, Seconds turn_start) {
    BotSeat& bot = *s.bot;
    bot.pending = PendingBot{};
    bot.pending->turn_start = turn_start;
    if (!options_.async_bots) {
        try {
            bot.pending->action = bot_next_action(bot.built.profile, toolkit_, s.game.transcript(), bot.slot,
                                                  bot.last_partner_verdict, bot.rng);
        } catch (const std::exception& e) {
            spdlog::warn("bot for session {} failed: {}", s.id, e.what());
            bot.pending->action = BotExitAction{ExitReason::BackendFailure};
        }
        return;
    }
    // Copies only: the worker may outlive this session.
    std::packaged_task<std::pair<BotAction, Rng>()> task(
        [profile = bot.built.profile, toolkit = toolkit_, transcript = s.game.transcript(), slot = bot.slot,
         verdict = bot.last_partner_verdict, rng = bot.rng]() mutable {
            auto action = bot_next_action(profile, toolkit, transcript, slot, verdict, rng);
            return std::make_pair(std::move(action), rng);
        });
    bot.pending->job = task.get_future();
    std::thread(std::move(task)).detach();
}

void GatewayCore::drive_bot(Live& s, double now, std::vector<Outbound>& out) {
    if (!s.bot || !s.bot->pending || s.game.phase().kind != PhaseKind::Chatting) return;
    BotSeat& bot = *s.bot;
    PendingBot& p = *bot.pending;
    const Seconds c = chat_clock(s, now);
    const Seconds deadline = s.game.phase().turn_deadline;
    const Seconds latest = std::max(p.turn_start, deadline - config_.server.bot_margin_s);

    if (!p.action && p.job.valid() &&
        p.job.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
        try {
            auto [action, rng] = p.job.get();
            p.action = std::move(action);
            bot.rng = rng;
        } catch (const std::exception& e) {
            spdlog::warn("bot for session {} failed: {}", s.id, e.what());
            p.action = BotExitAction{ExitReason::BackendFailure};
        }
    }
    if (!p.action) {
        if (c < latest) return;
        spdlog::warn("bot for session {} missed its turn; leaving the chat", s.id);
        p.action = BotExitAction{ExitReason::BackendFailure};
    }

    const Seconds at_least = std::max(p.turn_start, s.game.clock());
    if (const auto* exit = std::get_if<BotExitAction>(&*p.action)) {
        spdlog::info("bot leaves session {}: {}", s.id, to_string(exit->reason));
        bot.pending.reset();
        on_notifications(s, s.game.apply(event::AbruptExit{bot.slot, std::max(at_least, std::min(c, latest))}), now,
                         out);
        return;
    }
    const auto& reply = std::get<BotReply>(*p.action);
    const Seconds due = p.turn_start + std::min(reply.delay, std::max(0.0, latest - p.turn_start));
    if (c < due) return;
    const Seconds at = std::max(due, s.game.clock());
    const std::string text = reply.text;
    bot.pending.reset();
    if (s.game.validate_message(bot.slot, text, at)) return;  // too late; the clock tick ends the turn
    on_notifications(s, s.game.apply(event::MessageSent{{bot.slot, text, at}}), now, out);
}

void GatewayCore::sync_timers(Live& s, double now, std::vector<Outbound>& out, bool force) {
    if (s.game.phase().kind != PhaseKind::Chatting) return;
    if (!force && now < s.next_sync) return;
    s.next_sync = now + config_.server.timersync_s;
    const Seconds c = chat_clock(s, now);
    const auto& phase = s.game.phase();
    for (Slot slot : {Slot::A, Slot::B}) {
        const auto conn = s.conn[index_of(slot)];
        if (!conn) continue;
        out.push_back({*conn, frame::TimerSync{std::max(0.0, config_.session.session_duration - c),
                                               std::max(0.0, std::min(phase.turn_deadline, config_.session.session_duration) - c),
                                               phase.current_turn == slot}});
    }
}

void GatewayCore::on_notifications(Live& s, const std::vector<Notification>& notes, double now,
                                   std::vector<Outbound>& out) {
    for (const auto& n : notes) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, notify::Delivered>) {
                    if (auto to = s.conn[index_of(other(v.message.sender))]) out.push_back({*to, frame::PeerText{v.message.text}});
                } else if constexpr (std::is_same_v<T, notify::TurnChanged>) {
                    if (s.game.phase().kind != PhaseKind::Chatting) return;
                    sync_timers(s, now, out, true);
                    if (s.bot && v.turn == s.bot->slot) start_bot_turn(s, s.game.clock());
                } else if constexpr (std::is_same_v<T, notify::ChatEnded>) {
                    if (s.bot) s.bot->pending.reset();
                    for (const auto& conn : s.conn)
                        if (conn) out.push_back({*conn, frame::ChatEnded{std::string(to_string(v.reason.kind))}});
                } else if constexpr (std::is_same_v<T, notify::GuessRequested>) {
                    if (auto to = s.conn[index_of(v.slot)]) out.push_back({*to, frame::GuessPrompt{}});
                } else if constexpr (std::is_same_v<T, notify::Completed>) {
                    finish(s, now, out);
                }
            },
            n);
    }
}

void GatewayCore::finish(Live& s, double now, std::vector<Outbound>& out) {
    if (s.done) return;
    s.done = true;
    ++completed_;
    const auto outcome = s.game.finalize();
    std::optional<BotMetadata> meta;
    if (s.bot) meta = s.bot->built.metadata;
    auto records = records_from_outcome(outcome, s.id, s.t0, now, meta, s.tokens);
    try {
        store_->append(std::move(records));
    } catch (const StorageFull& e) {
        spdlog::error("dropping records of session {}: {}", s.id, e.what());
    } catch (const std::exception& e) {
        spdlog::error("could not persist session {}: {}", s.id, e.what());
    }
    for (Slot slot : {Slot::A, Slot::B}) {
        const auto conn = s.conn[index_of(slot)];
        if (!conn) continue;
        std::optional<bool> correct;
        for (const auto& g : outcome.guesses)
            if (g.guess.guesser == slot) correct = g.correct;
        const auto counters = store_->counters(s.tokens[index_of(slot)]);
        out.push_back({*conn, frame::Result{correct, outcome.participants[index_of(other(slot))].kind, counters.correct,
                                            counters.games}});
        if (auto b = bindings_.find(*conn); b != bindings_.end()) b->second.session.reset();
    }
}

}  // namespace hon
