//! Metamorphic corruption corpus: one textual mutation of a pristine
//! fixture per case, each breaking a single well-formedness rule.

use super::corpus_documents;
use megaloop::diag::codes;
use megaloop::validate::Document;

pub struct Corruption {
    pub name: &'static str,
    /// File that is mutated.
    pub file: &'static str,
    pub from: &'static str,
    pub to: &'static str,
    pub code: &'static str,
    /// File whose diagnostics must carry `code`; defaults to `file`.
    pub reported_in: Option<&'static str>,
}

const fn case(
    name: &'static str,
    file: &'static str,
    from: &'static str,
    to: &'static str,
    code: &'static str,
) -> Corruption {
    Corruption {
        name,
        file,
        from,
        to,
        code,
        reported_in: None,
    }
}

impl Corruption {
    pub fn reported_in(&self) -> &'static str {
        self.reported_in.unwrap_or(self.file)
    }

    /// The whole corpus with this one mutation applied.
    pub fn documents(&self) -> Vec<Document> {
        let mut docs = corpus_documents();
        let doc = docs
            .iter_mut()
            .find(|d| d.path == self.file)
            .unwrap_or_else(|| panic!("{}: no document `{}`", self.name, self.file));
        assert!(doc.text.contains(self.from), "{}: `{}` not found in {}", self.name, self.from, self.file);
        doc.text = doc.text.replacen(self.from, self.to, 1);
        docs
    }
}

const SR: &str = "self-repair.fld";
const SRA: &str = "self-repair-a.fld";
const SR_LD: &str = "self-repair.ld";
const STRAT_LD: &str = "self-repair-strategies.ld";
const TRIGGER: &str = "trigger \"RtException; 0.2s; Monitor\"";
const EFFECT: &str = "effect selfRepair -> mRUBiS [w]";

pub fn cases() -> Vec<Corruption> {
    vec![
        // syntax
        case("missing brace", SR, "megamodel \"Self-repair\" {", "megamodel \"Self-repair\"", codes::SYNTAX),
        case("unknown stereotype", SR, "<<Plan>>", "<<Planning>>", codes::SYNTAX),
        case("patch missing layer index", "add-strategies.patch", "add-layer 2 \"Layer-2\"", "add-layer \"Layer-2\"", codes::SYNTAX),
        case("empty megamodel name", SR, "megamodel \"Self-repair\"", "megamodel \"\"", codes::NAME_INVALID),
        case("condition syntax", SRA, "> 5 and", "> > 5 and", codes::COND_PARSE),
        // megamodel rules
        case("no initial state", SR, "initial Monitor", "final Monitor", codes::NO_INITIAL),
        case("no final state", "update-software.fld", "destruction Done", "initial Done", codes::NO_FINAL),
        case("state shadows operation", SR, "final Executed", "final Executed\n  final Update", codes::DUP_NAME),
        case("operation without exits", SR, "    exits { done }\n    reads TGGRules\n    writes", "    reads TGGRules\n    writes", codes::OP_EXITS),
        case("entries on a basic op", SR, "operation Repair <<Plan>> {", "operation Repair <<Plan>> {\n    entries { a }", codes::OP_ENTRIES),
        case("duplicate exit", SR, "exits { planned, no_strategy }", "exits { planned, planned }", codes::DUP_COMPARTMENT),
        case("usage of unknown slot", SR, "reads RepairStrategies", "reads Strategies", codes::USAGE_SLOT),
        case("duplicate usage", SR, "reads RepairStrategies", "reads RepairStrategies\n    reads RepairStrategies", codes::USAGE_DUP),
        case("stereotyped megamodel ref", "self-repair-strategies.fld", "feedbackLoopModel megamodel-ref", "feedbackLoopModel : AdaptationModel megamodel-ref", codes::SLOT_REF),
        case("flow to unknown element", SR, "flow Effect.done -> Executed", "flow Effect.done -> Finished", codes::FLOW_ENDPOINT),
        case("flow from a final state", SR, "flow Monitor -> Update", "flow Analyzed -> Update", codes::FLOW_SOURCE),
        case("flow into an initial state", SR, "flow Effect.done -> Executed", "flow Effect.done -> Monitor", codes::FLOW_TARGET),
        case("ambiguous entry", "self-management-1.fld", "flow Repair.Analyzed -> Optimize.Analyze", "flow Repair.Analyzed -> Optimize", codes::FLOW_TARGET),
        case("unrouted exit", SR, "  flow Repair.no_strategy -> Effect\n", "", codes::EXIT_FLOW),
        case("exit routed twice", SR, "flow Repair.planned -> Effect", "flow Repair.planned -> Effect\n  flow Repair.planned -> Executed", codes::EXIT_FLOW),
        case("initial state without flow", SR, "  flow Monitor -> Update\n", "", codes::INIT_FLOW),
        case("decision without else", SRA, "else -> Failures", "when \"runCount() > 1\" -> Failures", codes::DEC_ELSE),
        case("condition names unknown exit", SRA, "CheckForFailures -> no_failures)", "CheckForFailures -> healthy)", codes::COND_REF),
        case("condition names unknown op", SRA, "runsSince(CheckForFailures", "runsSince(Check", codes::COND_REF),
        // architecture rules
        case("layer declared twice", STRAT_LD, "layer 2 \"Layer-2\"", "layer 1 \"Layer-2\"", codes::LAYER_DUP),
        case("loop in layer 0", SR_LD, "software mRUBiS : \"mRUBiS\"", "software mRUBiS : \"mRUBiS\"\n    module extra : \"Self-repair\"", codes::LAYER_ZERO),
        case("software senses upwards", SR_LD, EFFECT, "effect selfRepair -> mRUBiS [w]\n  sense mRUBiS <- selfRepair [r]", codes::LAYER_DIR),
        case("module declared twice", SR_LD, "module selfRepairA : \"Self-repair-A\"", "module selfRepairA : \"Self-repair-A\"\n    module selfRepairA : \"Self-repair-A\"", codes::MOD_DUP),
        case("unknown megamodel", SR_LD, "module selfRepairA : \"Self-repair-A\"", "module selfRepairA : \"Self-repair-B\"", codes::MM_UNKNOWN),
        case("effect on unknown module", SR_LD, EFFECT, "effect selfRepair -> mRUBiX [w]", codes::EDGE_MODULE),
        case("read-only effect", SR_LD, EFFECT, "effect selfRepair -> mRUBiS [r]", codes::EDGE_MODE),
        case("writing sense", SR_LD, "sense selfRepair <- mRUBiS [r]", "sense selfRepair <- mRUBiS [w]", codes::EDGE_MODE),
        case("use from software", SR_LD, "use selfRepair.Update -> update", "use selfRepair.Update -> update\n  use mRUBiS.Update -> update", codes::USE_SOURCE),
        case("use of unknown op", SR_LD, "use selfRepair.Update -> update", "use selfRepair.Upgrade -> update", codes::USE_OP),
        case("op bound twice", SR_LD, "use selfRepair.Repair -> repair", "use selfRepair.Repair -> repair\n  use selfRepair.Repair -> effect", codes::USE_DUP),
        case("complex op bound to software", SR_LD, "use selfRepair.Analyze -> selfRepairA", "use selfRepair.Analyze -> deepCheck", codes::USE_KIND),
        case("basic op bound to a loop", SR_LD, "use selfRepair.Repair -> repair", "use selfRepair.Repair -> selfRepairA", codes::USE_KIND),
        case("unbound op", SR_LD, "  use selfRepair.Effect -> effect\n", "", codes::USE_MISSING),
        case("loop invokes itself", SR_LD, "use selfRepair.Analyze -> selfRepairA", "use selfRepair.Analyze -> selfRepair", codes::USE_CYCLE),
        case("entry sets differ", "self-management-1.ld", "use selfManagement.Optimize -> selfOptimization", "use selfManagement.Optimize -> selfRepair", codes::SIG_MISMATCH),
        Corruption {
            reported_in: Some(SR_LD),
            ..case("parameter without callee slot", SR, "complex Analyze {\n    exits { Failures, OK }", "complex Analyze {\n    exits { Failures, OK }\n    reads TGGRules", codes::PARAM_ALIAS)
        },
        case("unbound megamodel ref", STRAT_LD, "  bind-model strategies.feedbackLoopModel -> selfRepair\n", "", codes::BIND_MODEL),
        case("binding of unknown slot", STRAT_LD, "bind-model strategies.feedbackLoopModel", "bind-model strategies.RepairStrategies", codes::BIND_MODEL),
        case("empty trigger", SR_LD, TRIGGER, "trigger \"; ; Monitor\"", codes::TRIG_EMPTY),
        case("period without unit", SR_LD, TRIGGER, "trigger \"RtException; 0.2; Monitor\"", codes::TRIG_UNIT),
        case("trigger with two fields", SR_LD, TRIGGER, "trigger \"RtException; 0.2s\"", codes::TRIG_SYNTAX),
        case("trigger on a non-initial state", SR_LD, TRIGGER, "trigger \"RtException; 0.2s; Executed\"", codes::TRIG_STATE),
        case("undeclared event type", SR_LD, TRIGGER, "trigger \"RtFailure; 0.2s; Monitor\"", codes::TRIG_EVENT),
        case("interception of unknown op", STRAT_LD, "After[DeepCheck]", "After[DeepScan]", codes::TRIG_EVENT),
        case("trigger on software", SR_LD, EFFECT, "effect selfRepair -> mRUBiS [w]\n  sense mRUBiS <- mRUBiS [r] trigger \"RtException; 1s; Start\"", codes::TRIG_TARGET),
        // event declarations
        case("unknown parent event", "events.evt", "extends RtException", "extends Failure", codes::EVENT_UNKNOWN),
        case("event hierarchy cycle", "events.evt", "event RtException;", "event RtException extends OutOfMemoryRtException;", codes::EVENT_CYCLE),
        case("event declared twice", "events.evt", "event LoadIncrease;", "event LoadIncrease;\nevent LoadIncrease;", codes::EVENT_DUP),
    ]
}
