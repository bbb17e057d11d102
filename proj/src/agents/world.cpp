// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/agents/world.hpp>

#include <stdexcept>

namespace iotln::agents {

Agent::Agent(World& world, std::string name) : world_(world), name_(std::move(name)) {}

World::World(std::uint64_t seed, chain::ChainConfig chain_config)
    : chain_(chain_config), rng_(seed), delay_([](const std::string&, const std::string&) { return 5; })
{
}

void World::add(Agent& agent)
{
    if (agents_.contains(agent.name())) throw std::invalid_argument("duplicate agent name " + agent.name());
    agents_[agent.name()] = &agent;
    order_.push_back(&agent);
}

Agent* World::find(const std::string& name) const
{
    auto it = agents_.find(name);
    return it == agents_.end() ? nullptr : it->second;
}

void World::set_online(const std::string& name, bool online)
{
    if (online)
        offline_.erase(name);
    else
        offline_.insert(name);
}

void World::enqueue(Event e)
{
    e.seq = seq_++;
    queue_.push(std::move(e));
}

void World::send(const std::string& from, const std::string& to, MsgType type, Bytes wire)
{
    TranscriptEntry entry{now_ms_, from, to, type, wire.size()};
    transcript_.push_back(entry);
    for (const auto& tap : taps_) tap(entry, wire);
    if (interceptor_ && !interceptor_(entry, wire)) {
        ++dropped_;
        return;
    }
    inject(from, to, type, std::move(wire));
}

void World::inject(const std::string& from, const std::string& to, MsgType, Bytes wire)
{
    Event e;
    e.time = now_ms_ + delay_(from, to);
    e.from = from;
    e.to = to;
    e.wire = std::move(wire);
    enqueue(std::move(e));
}

void World::set_timer(const std::string& agent, std::uint64_t delay_ms, std::uint64_t tag)
{
    Event e;
    e.time = now_ms_ + delay_ms;
    e.is_timer = true;
    e.to = agent;
    e.tag = tag;
    enqueue(std::move(e));
}

std::size_t World::run_until_idle(std::size_t max_events)
{
    std::size_t n = 0;
    while (!queue_.empty() && n < max_events) {
        Event e = queue_.top();
        queue_.pop();
        now_ms_ = std::max(now_ms_, e.time);
        ++n;
        Agent* a = find(e.to);
        if (a == nullptr || offline_.contains(e.to)) {
            ++dropped_;
            continue;
        }
        if (e.is_timer)
            a->on_timer(e.tag);
        else
            a->on_receive(e.from, e.wire);
    }
    return n;
}

void World::mine(std::uint32_t n)
{
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto block_time = now_ms_ + block_interval_ms_;
        // Timers and messages due before the block land first.
        while (!queue_.empty() && queue_.top().time <= block_time) run_until_idle(1);
        now_ms_ = block_time;
        const auto h = chain_.mine_block(1);
        for (Agent* a : order_)
            if (!offline_.contains(a->name())) a->on_block(h);
    }
}

bool World::settle(std::uint32_t max_blocks)
{
    std::uint32_t mined = 0;
    for (;;) {
        run_until_idle();
        bool waiting = false;
        for (Agent* a : order_) waiting = waiting || (!offline_.contains(a->name()) && a->awaiting_blocks());
        if (!waiting) return true;
        if (mined == max_blocks) return false;
        mine(1);
        ++mined;
    }
}

std::vector<std::string> World::transcript_lines(bool with_time) const
{
    std::vector<std::string> out;
    out.reserve(transcript_.size());
    for (const auto& e : transcript_) {
        std::string line;
        if (with_time) line = std::to_string(e.time_ms) + " ";
        line += e.from + " -> " + e.to + " " + std::string(to_string(e.type));
        out.push_back(std::move(line));
    }
    return out;
}

} // namespace iotln::agents
