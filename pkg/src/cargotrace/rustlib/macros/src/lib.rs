//! `#[traced]`: rewrite a function so it emits an enter event with captured
//! parameter values and exactly one exit event per dynamic call, while
//! keeping the declared signature (name, parameters, return type, generics,
//! where clauses) byte-for-byte intact and leaving value lifetimes and drop
//! order unchanged.
//!
//! Shape of the rewrite, for `fn f(a: A, b: B) -> R { BODY }`:
//!
//! ```text
//! fn f(__ct_arg0: A, __ct_arg1: B) -> R {
//!     let mut __ct_span = CallSpan::enter_with("path", "SINK_VAR", |cap| vec![
//!         capture(&__ct_arg0), capture(&__ct_arg1),
//!     ]);
//!     let __ct_out = (move || { let a = __ct_arg0; let b = __ct_arg1; BODY })();
//!     __ct_span.exit_normal_with(|cap| capture(&__ct_out));
//!     __ct_out
//! }
//! ```
//!
//! Captures take temporary shared references that end before the closure is
//! built; rebinding the original patterns first thing inside the closure
//! reproduces the original declaration order, so parameters drop exactly
//! where and in the order they did before. Early `return` and `?` leave the
//! closure, not the function, so every exit path reaches the exit event;
//! unwinding is covered by the span's drop guard.
//!
//! Functions this macro cannot wrap faithfully (async, const, variadic,
//! parameters carrying attributes, bodiless trait declarations) are passed
//! through unchanged rather than broken.

use proc_macro::TokenStream;
use proc_macro2::TokenStream as TokenStream2;
use quote::{format_ident, quote, ToTokens};
use syn::{
    parse_quote, Block, FnArg, ImplItemFn, ItemFn, LitStr, ReturnType, Signature, TraitItemFn,
    Type,
};

const DEFAULT_SINK_ENV: &str = "CARGOTRACE_SINK";

#[proc_macro_attribute]
pub fn traced(attr: TokenStream, item: TokenStream) -> TokenStream {
    let mut name: Option<String> = None;
    let mut sink_env: Option<String> = None;
    let arg_parser = syn::meta::parser(|meta| {
        if meta.path.is_ident("name") {
            name = Some(meta.value()?.parse::<LitStr>()?.value());
            Ok(())
        } else if meta.path.is_ident("sink_env") {
            sink_env = Some(meta.value()?.parse::<LitStr>()?.value());
            Ok(())
        } else {
            Err(meta.error("expected `name = \"...\"` or `sink_env = \"...\"`"))
        }
    });
    syn::parse_macro_input!(attr with arg_parser);
    let sink_env = sink_env.unwrap_or_else(|| DEFAULT_SINK_ENV.to_string());

    let original: TokenStream2 = item.clone().into();

    if let Ok(f) = syn::parse::<ItemFn>(item.clone()) {
        let vis = f.vis.to_token_stream();
        return expand(original, f.attrs, vis, f.sig, *f.block, name, &sink_env);
    }
    if let Ok(m) = syn::parse::<ImplItemFn>(item.clone()) {
        let mut head = m.vis.to_token_stream();
        m.defaultness.to_tokens(&mut head);
        return expand(original, m.attrs, head, m.sig, m.block, name, &sink_env);
    }
    if let Ok(t) = syn::parse::<TraitItemFn>(item) {
        if let Some(body) = t.default {
            return expand(
                original,
                t.attrs,
                TokenStream2::new(),
                t.sig,
                body,
                name,
                &sink_env,
            );
        }
        return original.into(); // declaration without a body: nothing to trace
    }
    original.into()
}

fn expand(
    original: TokenStream2,
    attrs: Vec<syn::Attribute>,
    head: TokenStream2,
    mut sig: Signature,
    block: Block,
    name: Option<String>,
    sink_env: &str,
) -> TokenStream {
    if sig.asyncness.is_some() || sig.constness.is_some() || sig.variadic.is_some() {
        return original.into();
    }

    let mut captures: Vec<TokenStream2> = Vec::new();
    let mut rebinds: Vec<TokenStream2> = Vec::new();
    let mut index = 0usize;
    for input in sig.inputs.iter_mut() {
        match input {
            FnArg::Receiver(receiver) => {
                if !receiver.attrs.is_empty() {
                    return original.into();
                }
                captures.push(quote! {
                    (&::cargotrace_runtime::Capture(&self)).capture_value(__ct_cap)
                });
            }
            FnArg::Typed(param) => {
                if !param.attrs.is_empty() {
                    return original.into();
                }
                let pattern = param.pat.clone();
                let ident = format_ident!("__ct_arg{}", index);
                index += 1;
                param.pat = Box::new(parse_quote!(#ident));
                captures.push(quote! {
                    (&::cargotrace_runtime::Capture(&#ident)).capture_value(__ct_cap)
                });
                rebinds.push(quote! { let #pattern = #ident; });
            }
        }
    }

    let function_name = name.unwrap_or_else(|| sig.ident.to_string());
    let name_lit = LitStr::new(&function_name, sig.ident.span());
    let sink_lit = LitStr::new(sink_env, sig.ident.span());

    let body: TokenStream2 = if sig.unsafety.is_some() {
        quote! { #[allow(unused_unsafe)] unsafe #block }
    } else {
        block.to_token_stream()
    };

    let enter = |binding: TokenStream2| {
        quote! {
            let #binding = ::cargotrace_runtime::CallSpan::enter_with(#name_lit, #sink_lit, |__ct_cap| {
                #[allow(unused_imports)]
                use ::cargotrace_runtime::{SerializeCapture as _, FallbackCapture as _};
                ::std::vec::Vec::<::cargotrace_runtime::CapturedValue>::from([#(#captures),*])
            });
        }
    };

    // A `-> !` function never returns normally; the drop guard alone covers
    // its unwinding exit, and binding the diverging call would only create
    // never-typed locals.
    let diverges = matches!(&sig.output, ReturnType::Type(_, ty) if matches!(**ty, Type::Never(_)));
    let new_block: Block = if diverges {
        let enter = enter(quote!(__ct_span));
        parse_quote!({
            #enter
            (move || { #(#rebinds)* #body })()
        })
    } else {
        let enter = enter(quote!(mut __ct_span));
        parse_quote!({
            #enter
            let __ct_out = (move || { #(#rebinds)* #body })();
            __ct_span.exit_normal_with(|__ct_cap| {
                #[allow(unused_imports)]
                use ::cargotrace_runtime::{SerializeCapture as _, FallbackCapture as _};
                (&::cargotrace_runtime::Capture(&__ct_out)).capture_value(__ct_cap)
            });
            __ct_out
        })
    };

    quote! {
        #(#attrs)*
        #[allow(unreachable_code)]
        #head #sig #new_block
    }
    .into()
}
