#pragma once

#include <string>
#include <string_view>

namespace fbk {

// Instruction shared by training exports and feedback queries, so the model
// sees the same framing at training and inference time.
inline constexpr std::string_view kTaskInstruction =
    "You supervise peer counselors. Review the helper's response at the end of the conversation below. "
    "State whether it is appropriate. If it is not, give the goal the helper should pursue at this point and "
    "how the response should align with it, the skill categories to improve, and an alternative response. "
    "Optionally list the skill categories the helper did well. Use the feedback format exactly.";

// `context_text` is already rendered as "Speaker: text" lines.
inline std::string render_feedback_input(std::string_view context_text, std::string_view utterance_text) {
    std::string out = "Conversation:\n";
    out += context_text.empty() ? std::string_view("(no earlier utterances)\n") : context_text;
    out += "\nResponse to review:\nHelper: ";
    out += utterance_text;
    return out;
}

inline std::string render_feedback_prompt(std::string_view input) {
    std::string out(kTaskInstruction);
    out += "\n\n";
    out += input;
    return out;
}

}  // namespace fbk
