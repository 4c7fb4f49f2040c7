use crate::error::Result; #[allow(dead_code)] fn _todo() -> Result<()> { Ok(()) }
