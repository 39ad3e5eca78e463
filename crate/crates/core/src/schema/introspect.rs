use std::path::Path;

use rusqlite::{Connection, OpenFlags};

use super::{Column, ColumnRef, DatabaseSchema, ForeignKey, SchemaError, Table};

pub(super) fn read_schema(db_id: String, path: &Path) -> Result<DatabaseSchema, SchemaError> {
    let sqlite = |source| SchemaError::Sqlite {
        path: path.to_path_buf(),
        source,
    };
    let conn =
        Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY).map_err(sqlite)?;

    let mut stmt = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid")
        .map_err(sqlite)?;
    let names: Vec<String> = stmt
        .query_map([], |row| row.get(0))
        .map_err(sqlite)?
        .collect::<Result<_, _>>()
        .map_err(sqlite)?;

    let mut tables = Vec::with_capacity(names.len());
    let mut primary_keys = Vec::new();
    let mut raw_fks = Vec::new();
    for name in &names {
        let mut info = conn
            .prepare("SELECT name, type, pk FROM pragma_table_info(?1) ORDER BY cid")
            .map_err(sqlite)?;
        let mut cols = Vec::new();
        let mut pks: Vec<(i64, String)> = Vec::new();
        let rows = info
            .query_map([name], |row| {
                Ok((
                    row.get::<_, String>(0)?,
                    row.get::<_, String>(1)?,
                    row.get::<_, i64>(2)?,
                ))
            })
            .map_err(sqlite)?;
        for row in rows {
            let (col, ty, pk) = row.map_err(sqlite)?;
            if pk > 0 {
                pks.push((pk, col.clone()));
            }
            cols.push(Column::new(col, ty));
        }
        pks.sort();
        primary_keys.extend(pks.into_iter().map(|(_, c)| ColumnRef::new(name, c)));

        let mut fk = conn
            .prepare(
                r#"SELECT "from", "table", "to" FROM pragma_foreign_key_list(?1) ORDER BY id, seq"#,
            )
            .map_err(sqlite)?;
        let rows = fk
            .query_map([name], |row| {
                Ok((
                    row.get::<_, String>(0)?,
                    row.get::<_, String>(1)?,
                    row.get::<_, Option<String>>(2)?,
                ))
            })
            .map_err(sqlite)?;
        for row in rows {
            let (from, target, to) = row.map_err(sqlite)?;
            raw_fks.push((ColumnRef::new(name, from), target, to));
        }
        tables.push(Table::new(name, cols));
    }

    // `REFERENCES t` without a column list points at t's primary key
    let mut foreign_keys = Vec::new();
    for (column, target, to) in raw_fks {
        let to = match to {
            Some(c) => Some(c),
            None => primary_keys
                .iter()
                .find(|pk| pk.table.eq_ignore_ascii_case(&target))
                .map(|pk| pk.column.clone()),
        };
        let Some(to) = to else { continue };
        let table = tables.iter().find(|t| t.name.eq_ignore_ascii_case(&target));
        let Some(table) = table.filter(|t| t.column(&to).is_some()) else {
            log::warn!(
                "{}: skipping foreign key {column} -> {target}.{to}",
                path.display()
            );
            continue;
        };
        foreign_keys.push(ForeignKey {
            column,
            references: ColumnRef::new(&table.name, to),
        });
    }

    DatabaseSchema::new(db_id, tables, primary_keys, foreign_keys)
}
