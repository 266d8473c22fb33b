//! Prompt templates with `{{slot}}` interpolation.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    Interface,
    InterfaceRepair,
    Applications,
    Implementations,
    ImplementationRetry,
    Sampler,
    SamplerFeedback,
    SamplerRetry,
    Edit,
    EditRepair,
}

impl Template {
    pub const ALL: [Template; 10] = [
        Template::Interface,
        Template::InterfaceRepair,
        Template::Applications,
        Template::Implementations,
        Template::ImplementationRetry,
        Template::Sampler,
        Template::SamplerFeedback,
        Template::SamplerRetry,
        Template::Edit,
        Template::EditRepair,
    ];

    pub fn text(self) -> &'static str {
        match self {
            Template::Interface => include_str!("../../prompts/interface.txt"),
            Template::InterfaceRepair => include_str!("../../prompts/interface_repair.txt"),
            Template::Applications => include_str!("../../prompts/applications.txt"),
            Template::Implementations => include_str!("../../prompts/implementations.txt"),
            Template::ImplementationRetry => include_str!("../../prompts/implementation_retry.txt"),
            Template::Sampler => include_str!("../../prompts/sampler.txt"),
            Template::SamplerFeedback => include_str!("../../prompts/sampler_feedback.txt"),
            Template::SamplerRetry => include_str!("../../prompts/sampler_retry.txt"),
            Template::Edit => include_str!("../../prompts/edit.txt"),
            Template::EditRepair => include_str!("../../prompts/edit_repair.txt"),
        }
    }

    /// Slot names in order of first appearance.
    pub fn slots(self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        let mut rest = self.text();
        while let Some(i) = rest.find("{{") {
            let after = &rest[i + 2..];
            let Some(j) = after.find("}}") else { break };
            let name = &after[..j];
            if !out.contains(&name) {
                out.push(name);
            }
            rest = &after[j + 2..];
        }
        out
    }

    /// Fill every slot. Panics on a missing or unknown slot: templates and
    /// callers ship together, so a mismatch is a programming error.
    pub fn render(self, values: &[(&str, &str)]) -> String {
        let slots = self.slots();
        for (k, _) in values {
            assert!(slots.contains(k), "template {self:?} has no slot `{k}`");
        }
        let mut out = self.text().to_string();
        for slot in slots {
            let v = values
                .iter()
                .find(|(k, _)| *k == slot)
                .unwrap_or_else(|| panic!("template {self:?} needs slot `{slot}`"))
                .1;
            out = out.replace(&format!("{{{{{slot}}}}}"), v);
        }
        out
    }
}

/// Value of a `Key: value` header line, for scripted providers.
pub fn header<'a>(prompt: &'a str, key: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(':').map(str::trim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_template_renders() {
        for t in Template::ALL {
            let slots = t.slots();
            let vals: Vec<(&str, &str)> = slots.iter().map(|s| (*s, "VALUE")).collect();
            let out = t.render(&vals);
            assert!(!out.contains("{{"), "{t:?}");
            assert!(header(&out, "Task").is_some());
        }
    }

    #[test]
    fn header_lookup() {
        let p = Template::Applications.render(&[
            ("shape_id", "chair_1"),
            ("round", "2"),
            ("rounds", "5"),
            ("library", ""),
            ("parts", ""),
            ("description", ""),
        ]);
        assert_eq!(header(&p, "Shape"), Some("chair_1"));
        assert_eq!(header(&p, "Round"), Some("2 of 5"));
        assert_eq!(header(&p, "Missing"), None);
    }

    #[test]
    #[should_panic]
    fn missing_slot_panics() {
        Template::Edit.render(&[("program", "")]);
    }
}
