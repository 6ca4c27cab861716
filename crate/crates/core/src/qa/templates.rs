use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::QaError;
use crate::taskgen::Category;

const BUILTIN: &str = include_str!("templates.json");

const SPATIAL_PHRASES: &[&str] = &[
    "lead_in_scene",
    "lead_in_isolated",
    "option_axis",
    "option_occlusion",
    "summary",
    "caption_scene",
    "caption_isolated",
    "text2region_item",
    "text2region",
    "region2region_axis",
    "region2region_occlusion",
    "conclusion",
];

const SEQUENTIAL_PHRASES: &[&str] = &[
    "lead_in",
    "option",
    "summary",
    "caption",
    "caption_landmarks",
    "text2region",
    "text2region_landmarks",
    "region2region_step",
    "region2region",
    "conclusion",
];

const ANALYTICAL_PHRASES: &[&str] = &[
    "lead_in_link",
    "lead_in_single",
    "option",
    "summary",
    "caption_link",
    "caption_single",
    "text2region_item",
    "text2region",
    "region2region_link",
    "region2region",
    "conclusion",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTemplates {
    /// Alternative question phrasings; the template id indexes this list.
    pub questions: Vec<String>,
    pub phrases: BTreeMap<String, String>,
}

impl CategoryTemplates {
    pub fn phrase(&self, name: &str) -> Result<&str, QaError> {
        self.phrases
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| QaError::Template(format!("missing phrase `{name}`")))
    }
}

/// Question and reasoning phrasings, keyed by category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateCatalog {
    pub spatial: CategoryTemplates,
    pub sequential: CategoryTemplates,
    pub analytical: CategoryTemplates,
}

impl Default for TemplateCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateCatalog {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN).expect("built-in template catalog is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, QaError> {
        let catalog: TemplateCatalog =
            serde_json::from_str(text).map_err(|e| QaError::Template(e.to_string()))?;
        catalog.check()?;
        Ok(catalog)
    }

    pub fn load(path: &Path) -> Result<Self, QaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QaError::Template(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn category(&self, c: Category) -> &CategoryTemplates {
        match c {
            Category::Spatial => &self.spatial,
            Category::Sequential => &self.sequential,
            Category::Analytical => &self.analytical,
        }
    }

    fn check(&self) -> Result<(), QaError> {
        for (c, names) in [
            (Category::Spatial, SPATIAL_PHRASES),
            (Category::Sequential, SEQUENTIAL_PHRASES),
            (Category::Analytical, ANALYTICAL_PHRASES),
        ] {
            let t = self.category(c);
            if t.questions.is_empty() {
                return Err(QaError::Template(format!("no {c} questions")));
            }
            for name in names {
                t.phrase(name)
                    .map_err(|_| QaError::Template(format!("{c}: missing phrase `{name}`")))?;
            }
            for text in t.questions.iter().chain(t.phrases.values()) {
                if text.contains('\n') {
                    return Err(QaError::Template(format!("{c}: templates must be single-line")));
                }
                placeholders(text)?;
            }
        }
        Ok(())
    }
}

fn placeholders(template: &str) -> Result<Vec<(usize, usize)>, QaError> {
    let mut out = Vec::new();
    let mut rest = 0;
    while let Some(open) = template[rest..].find('{') {
        let start = rest + open;
        let end = template[start..]
            .find('}')
            .map(|e| start + e)
            .ok_or_else(|| QaError::Template(format!("unclosed placeholder in `{template}`")))?;
        out.push((start, end));
        rest = end + 1;
    }
    Ok(out)
}

/// Substitute `{name}` placeholders; every placeholder must be bound.
pub fn fill(template: &str, vars: &[(&str, String)]) -> Result<String, QaError> {
    let mut out = String::with_capacity(template.len() + 32);
    let mut last = 0;
    for (start, end) in placeholders(template)? {
        let name = &template[start + 1..end];
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| v)
            .ok_or_else(|| QaError::Template(format!("unbound placeholder `{name}`")))?;
        out.push_str(&template[last..start]);
        out.push_str(value);
        last = end + 1;
    }
    out.push_str(&template[last..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_loads() {
        let c = TemplateCatalog::builtin();
        assert!(c.spatial.questions.len() >= 2);
    }

    #[test]
    fn fill_binds_placeholders() {
        let s = fill("{a} and {b}", &[("a", "x".into()), ("b", "y".into())]).unwrap();
        assert_eq!(s, "x and y");
        assert!(fill("{a} and {c}", &[("a", "x".into())]).is_err());
        assert!(fill("{a", &[("a", "x".into())]).is_err());
    }

    #[test]
    fn rejects_incomplete_catalog() {
        let mut v: serde_json::Value = serde_json::from_str(BUILTIN).unwrap();
        v["analytical"]["phrases"].as_object_mut().unwrap().remove("conclusion");
        assert!(TemplateCatalog::from_json(&v.to_string()).is_err());
    }
}
