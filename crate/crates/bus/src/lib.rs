//! Common knowledge bus: modules exchange knowledge fragments, queries and
//! section changes through a scheduler that records every delivery.
//!
//! ```
//! use agx_bus::{Bus, Mode, ModuleDescriptor, Passive, Payload};
//! use agx_core::KnowledgeFragment;
//!
//! let mut bus = Bus::new(Mode::Deterministic);
//! let a = bus.register(ModuleDescriptor::new("a", "sa"), Box::new(Passive)).unwrap();
//! bus.register(ModuleDescriptor::new("b", "sb"), Box::new(Passive)).unwrap();
//! let note = KnowledgeFragment::new("text", "text/plain", "hello");
//! bus.publish(a, Payload::Fragment(note)).unwrap();
//! bus.run_until_idle(10);
//! assert_eq!(bus.transcript().deliveries().count(), 2);
//! ```

pub mod audit;
mod bus;
pub mod demo;
mod message;
mod module;
pub mod scenario;
pub mod transcript;

pub use audit::{audit, audit_self_informing, AuditReport};
pub use bus::{section_token, Bus, BusError, BusResult, Mode, Outcome};
pub use demo::DemoModule;
pub use message::{BusMessage, Change, ChangeSet, Corr, MessageKind, Payload};
pub use module::{Action, BusModule, Ctx, ModuleDescriptor, ModuleHandle, Passive, Section, SectionOwner};
pub use transcript::{Record, Transcript};
