// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_AGENTS_WORLD_HPP
#define IOTLN_AGENTS_WORLD_HPP

#include <iotln/agents/messages.hpp>
#include <iotln/chain/chain.hpp>
#include <iotln/crypto/keys.hpp>

#include <functional>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace iotln::agents {

class World;

class Agent {
public:
    Agent(World& world, std::string name);
    virtual ~Agent() = default;
    Agent(const Agent&) = delete;
    Agent& operator=(const Agent&) = delete;

    const std::string& name() const { return name_; }

    virtual void on_receive(const std::string& from, const Bytes& wire) = 0;
    virtual void on_timer(std::uint64_t /*tag*/) {}
    virtual void on_block(std::uint32_t /*height*/) {}
    /// True while the agent cannot progress until more blocks are mined.
    virtual bool awaiting_blocks() const { return false; }

protected:
    World& world_;
    std::string name_;
};

struct TranscriptEntry {
    std::uint64_t time_ms = 0;
    std::string from;
    std::string to;
    MsgType type{};
    std::size_t size = 0;
};

/// Delivery delay in ms for a message from one agent to another.
using DelayFn = std::function<std::uint64_t(const std::string& from, const std::string& to)>;

/*
 * Deterministic discrete-event world: a clock, one chain, and a bus that
 * delivers messages in (time, send order). Blocks are mined only when
 * every queued event has run and some agent is waiting for depth.
 * Single-threaded; independent worlds can run in parallel.
 */
class World {
public:
    explicit World(std::uint64_t seed, chain::ChainConfig chain_config = {});

    chain::Chain& chain() { return chain_; }
    const chain::Chain& chain() const { return chain_; }
    std::uint64_t now_ms() const { return now_ms_; }
    /// Fresh RNG stream for a new agent or helper.
    crypto::Rng fork_rng() { return rng_.fork(); }

    void add(Agent& agent);
    Agent* find(const std::string& name) const;

    void set_delay(DelayFn fn) { delay_ = std::move(fn); }
    void set_block_interval_ms(std::uint64_t ms) { block_interval_ms_ = ms; }

    /// An offline agent's inbox drops messages, timers and block events.
    void set_online(const std::string& name, bool online);
    bool online(const std::string& name) const { return !offline_.contains(name); }

    void send(const std::string& from, const std::string& to, MsgType type, Bytes wire);
    /// Injects raw bytes as if `from` had sent them (adversarial network).
    void inject(const std::string& from, const std::string& to, MsgType type, Bytes wire);
    void set_timer(const std::string& agent, std::uint64_t delay_ms, std::uint64_t tag);

    /// Observer on every wire message at send time (the network tap).
    using Tap = std::function<void(const TranscriptEntry&, const Bytes&)>;
    void add_tap(Tap tap) { taps_.push_back(std::move(tap)); }
    /// In-path attacker: may rewrite the bytes; returning false drops them.
    /// Runs after the taps, so transcripts show what was sent.
    using Interceptor = std::function<bool(const TranscriptEntry&, Bytes& wire)>;
    void set_interceptor(Interceptor fn) { interceptor_ = std::move(fn); }

    /// Runs queued events until none is left. Returns the count processed.
    std::size_t run_until_idle(std::size_t max_events = 1'000'000);
    /// Mines n blocks one at a time, advancing the clock and notifying agents.
    void mine(std::uint32_t n = 1);
    /// Alternates run_until_idle and single-block mining while an agent waits
    /// for depth. Returns false if max_blocks was reached first.
    bool settle(std::uint32_t max_blocks = 200);

    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    void clear_transcript() { transcript_.clear(); }
    /// "from -> to type" lines; with_time prefixes the send time in ms.
    std::vector<std::string> transcript_lines(bool with_time = false) const;
    std::size_t dropped() const { return dropped_; }

private:
    struct Event {
        std::uint64_t time = 0;
        std::uint64_t seq = 0;
        bool is_timer = false;
        std::string from;
        std::string to;
        Bytes wire;
        std::uint64_t tag = 0;

        bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    void enqueue(Event e);

    chain::Chain chain_;
    crypto::Rng rng_;
    std::uint64_t now_ms_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t block_interval_ms_ = 600'000;
    DelayFn delay_;
    std::vector<Agent*> order_;
    std::map<std::string, Agent*> agents_;
    std::set<std::string> offline_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::vector<TranscriptEntry> transcript_;
    std::vector<Tap> taps_;
    Interceptor interceptor_;
    std::size_t dropped_ = 0;
};

} // namespace iotln::agents

#endif // IOTLN_AGENTS_WORLD_HPP
