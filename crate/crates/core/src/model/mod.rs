//! Recall-probability mathematics for simulated students: IRT, DAS3H with
//! time-window counters, and the sensory-memory corrected inner model.

pub mod history;
pub mod inner;
pub mod items;
pub mod params;
pub mod recall;
pub mod windows;

pub use history::InteractionRecord;
pub use inner::InnerModel;
pub use items::ItemBank;
pub use params::{Family, ParamSet};
pub use recall::{das3h_logit, das3h_recall, inner_recall, irt_recall, sample_response, sigmoid, SensoryMemory};
pub use windows::{count_windows, TimeWindows, WindowCount, WindowCounterTable};
