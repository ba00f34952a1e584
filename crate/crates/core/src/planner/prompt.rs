//! Instruction and query text.

use std::collections::BTreeMap;

use crate::actions::{StateSummary, Status, StructuredAction};
use crate::knowledge::Goal;
use crate::world::GroundStatus;

use super::{FeedbackMessage, QueryContext};

/// Interface descriptions shared by the planning and summarization prompts.
pub const ACTION_DESCRIPTION: &str = r#"explore(object, strategy)
Move around to find the object with the strategy: used to find objects including block items and entities. This action is finished once the object is visible (maybe at the distance).
Arguments:
- object: a string, the object to explore.
- strategy: a string, the strategy for exploration, "bfs" on the ground or "dfs" underground.

approach(object)
Move close to a visible object: used to approach the object you want to attack or mine. It may fail if the target object is not accessible.
Arguments:
- object: a string, the object to approach.

craft(object, materials, tool)
Craft the object with the materials and tool: used for crafting new object that is not in the inventory or is not enough. The required materials must be in the inventory and will be consumed, and the newly crafted objects will be added to the inventory. The tools like the crafting table and furnace should be in the inventory and this action will directly use them. Don't try to place or approach the crafting table or furnace. You don't need to collect the items after crafting. If the quantity you require is more than a unit, this action will craft the objects one unit by one unit. If the materials run out halfway through, this action will stop, and you will only get part of the objects you want that have been crafted.
Arguments:
- object: a dict, whose key is the name of the object and value is the object quantity.
- materials: a dict, whose keys are the names of the materials and values are the quantities.
- tool: a string, the tool used for crafting. Set to null if no tool is required.

smelt(object, materials, tool)
Smelt the object with the materials and tool: the same as craft, for items that need a furnace.
Arguments: the same as craft.

mine(object, tool)
Mine the object with the tool: can only mine the object within reach, cannot mine object from a distance. The obtained objects will be added to the inventory.
Arguments:
- object: a string, the object to mine.
- tool: a string, the tool used for mining. Set to null if no tool is required.

attack(object, tool)
Attack the object with the tool: used to attack the object within reach. This action will keep track of and attack the object until it is killed.
Arguments:
- object: a string, the object to attack.
- tool: a string, the tool used for attacking. Set to null if no tool is required.

equip(object)
Equip the object from the inventory: used to equip equipment, including tools, weapons, and armor. The object must be in the inventory.
Arguments:
- object: a string, the object to equip.

dig_down(ylevel, tool)
Dig down to the y-level with the tool: the only action you can take if you want to go underground for mining some ore.
Arguments:
- ylevel: an int, the y-level (absolute y coordinate) to dig to.
- tool: a string, the tool used for digging. Set to null if no tool is required.

go_up(tool)
Go back to the ground from underground: the only action you can take for going back to the ground if you are underground.
Arguments:
- tool: a string, the tool used for digging. Set to null if no tool is required.

build(blueprint)
Place blocks from the inventory following a blueprint, from the bottom up.
Arguments:
- blueprint: a string, the name of the blueprint, such as "shelter".

apply(object, tool)
Apply the tool on the object: used for fetching water, milk, lava with the tool bucket, shearing sheep with the tool shears.
Arguments:
- object: a string, the object to apply to.
- tool: a string, the tool used to apply."#;

const INSTRUCTION_HEAD: &str = "You serve as an assistant that helps me play the game Minecraft.

I will give you a goal in the game. Please think of a plan to achieve the goal, and then write a sequence of actions to realize the plan. The requirements and instructions are as follows:

1. You can only use the following functions. Don't make plans purely based on your experience, think about how to use these functions.

";

const INSTRUCTION_TAIL: &str = r#"

2. You cannot define any new function.

3. There is an inventory that stores all the objects I have. It is not an entity, but objects can be added to it or retrieved from it anytime at anywhere without specific actions. The mined or crafted objects will be added to this inventory, and the materials and tools to use are also from this inventory. Objects in the inventory can be directly used. Don't write the code to obtain them. If you plan to use some object not in the inventory, you should first plan to obtain it. You can view the inventory as one of my states, and it is written in form of a dictionary whose keys are the name of the objects I have and the values are their quantities.

4. You will get the following information about my current state:
- inventory: a dict representing the inventory mentioned above, whose keys are the name of the objects and the values are their quantities
- environment: a string including my surrounding biome, the y-level of my current location, and whether I am on the ground or underground
Pay attention to this information. Choose the easiest way to achieve the goal conditioned on my current state. Do not provide options, always make the final decision.

5. You must describe your thoughts on the plan in natural language at the beginning. After that, you should write all the actions together. The response should follow the format:
{
    "explanation": "explain why the last action failed, set to null for the first planning",
    "thoughts": "Your thoughts on the plan in natural language",
    "action_list": [
        {"name": "action name", "args": {"arg name": value}, "expectation": "describe the expected results of this action"},
        {"name": "action name", "args": {"arg name": value}, "expectation": "describe the expected results of this action"}
    ]
}
The action_list can contain arbitrary number of actions. The args of each action should correspond to the type mentioned in the Arguments part.
Remember to add ``` at the beginning and the end of the dict.
Ensure that your response can be parsed by Python json.loads

6. I will execute your code step by step and give you feedback. If some action fails, I will stop at that action and will not execute its following actions. The feedback will include error messages about the failed action. At that time, you should replan and write the new code just starting from that failed action."#;

const SUMMARY_HEAD: &str = "You serve as an assistant that helps me play the game Minecraft.

I am using a set of actions to achieve goals in the game Minecraft. I have recorded several action sequences successfully achieving a goal in a certain state. I will give you the goal, the state, and the sequences later. Please summarize the multiple action sequences into a single action sequence as a universal reference to achieve the goal given that certain state. Here are the instructions:

1. Each action sequence is a sequence of the following actions:

";

const SUMMARY_TAIL: &str = r#"

2. The action sequences before and after summarization are always conditioned on the given state, i.e., the actions are taken in that certain state to achieve the goal. I will describe the state in the following form:
State:
- inventory: a dict whose keys are the name of the objects and the values are their quantities. This inventory stores all the objects I have.
- environment: a dict including my surrounding biome and whether I am on the ground or underground.

3. The action sequence you summarize should be able to achieve the goal in general cases without specific modification. Every necessary action should be included, even though it does not appear in some sequences because I manually skipped it in some lucky cases. The actions redundant or irrelevant to the goal should be filtered out. The corner cases, such as success by luck and dealing with contingencies, should not be summarized into the final sequence.

4. You should describe your thoughts on summarization in natural language at the beginning. After that, give me the summarized action sequence as a list in JSON format. Your response should follow this form:

Thoughts: "Your thoughts and descriptions of your summarization"
Summarized action sequence:
[
    {"name": "action name", "args": {"arg name": value}, "expectation": "describe the expected results of this action"},
    {"name": "action name", "args": {"arg name": value}, "expectation": "describe the expected results of this action"}
]"#;

/// The system message for planning.
pub fn instruction() -> String {
    format!("{INSTRUCTION_HEAD}{ACTION_DESCRIPTION}{INSTRUCTION_TAIL}")
}

/// The system message for summarizing recorded sequences.
pub fn summary_instruction() -> String {
    format!("{SUMMARY_HEAD}{ACTION_DESCRIPTION}{SUMMARY_TAIL}")
}

pub fn render_inventory(inv: &BTreeMap<String, u32>) -> String {
    serde_json::to_string(inv).expect("string map serializes")
}

pub fn render_environment(state: &StateSummary) -> String {
    let ground = match state.ground_status {
        GroundStatus::OnGround => "on the ground",
        GroundStatus::Underground => "underground",
    };
    format!("biome: {}, y-level: {}, {ground}", state.biome, state.y_level)
}

/// "obtain 3 planks, given 1 log. Extra info: ..."
pub fn render_goal(goal: &Goal) -> String {
    let mut s = format!("obtain {} {}", goal.count, goal.object);
    let mats: Vec<String> = goal
        .material
        .iter()
        .flatten()
        .map(|(m, n)| format!("{n} {m}"))
        .collect();
    match (mats.is_empty(), &goal.tool) {
        (false, Some(t)) => s += &format!(", given {} and {t}", mats.join(", ")),
        (false, None) => s += &format!(", given {}", mats.join(", ")),
        (true, Some(t)) => s += &format!(", given {t}"),
        (true, None) => {}
    }
    if !goal.info.is_empty() {
        s += &format!(". Extra info: {}", goal.info.trim_end_matches('.'));
    }
    s
}

pub fn render_plan(actions: &[StructuredAction]) -> String {
    let v: Vec<serde_json::Value> = actions.iter().map(StructuredAction::to_value).collect();
    serde_json::to_string(&v).expect("actions serialize")
}

fn render_state(state: &StateSummary) -> String {
    format!(
        "My current state:\n- inventory: {}\n- environment: {}",
        render_inventory(&state.inventory),
        render_environment(state)
    )
}

fn render_feedback(f: &FeedbackMessage) -> String {
    match (&f.action, f.outcome) {
        (Some(a), Status::Success) => format!(
            "Action {} succeeded, and {}. Continue your plan. Do not repeat successful action. Remember to follow the response format.",
            a.name(),
            f.detail.trim_end_matches('.')
        ),
        (Some(a), Status::Failure) => format!(
            "Action {} failed, because {}. Revise your plan from the failed action. Remember to follow the response format.",
            a.name(),
            f.detail.trim_end_matches('.')
        ),
        (None, _) => format!(
            "Your last response was not usable, because {}. Revise your plan. Remember to follow the response format.",
            f.detail.trim_end_matches('.')
        ),
    }
}

/// Text of one user turn.
pub fn render_query(ctx: &QueryContext) -> String {
    match &ctx.feedback {
        None => {
            let mut s = format!("{}\n\nThe goal is to {}.\n\n", render_state(&ctx.state), render_goal(&ctx.goal));
            if let Some(r) = &ctx.reference_plan {
                s += &format!("Here is one plan to achieve similar goal for reference: {}.\n\n", render_plan(r));
            }
            s += "Begin your plan. Remember to follow the response format.";
            s
        }
        Some(f) => format!("{}\n\n{}", render_feedback(f), render_state(&f.state)),
    }
}

/// User turn for the summarizer. Recordings do not keep their starting
/// state, so none is described.
pub fn render_summary_query(goal: &str, seqs: &[Vec<StructuredAction>]) -> String {
    let mut s = format!("Goal: obtain {goal}\nState:\n- inventory: {{}}\n- environment: {{}}\n");
    for (i, q) in seqs.iter().enumerate() {
        s += &format!("Sequence {}: {}\n", i + 1, render_plan(q));
    }
    s
}
